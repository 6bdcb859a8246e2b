"""Input validation helpers shared by the functional API and the estimators."""
from __future__ import annotations

import numpy as np

__all__ = [
    "SizingError",
    "RankError",
    "dyadic_exponent",
    "check_signal",
    "check_design",
    "check_full_rank",
]


class SizingError(ValueError):
    """Raised when an array length is not compatible with a dyadic transform."""


class RankError(np.linalg.LinAlgError):
    """Raised when a design matrix is (numerically) rank deficient."""


def dyadic_exponent(n: int) -> int:
    """Return ``J`` such that ``n == 2**J``, or raise ``SizingError``."""
    n = int(n)
    if n < 1 or n & (n - 1):
        raise SizingError(f"length {n} is not a power of two")
    return n.bit_length() - 1


def check_signal(x, *, allow_2d: bool = False) -> np.ndarray:
    """Return ``x`` as a float array of dyadic length along axis 0."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.ndim > (2 if allow_2d else 1):
        raise SizingError(f"expected a {'1-D or 2-D' if allow_2d else '1-D'} array, got shape {x.shape}")
    dyadic_exponent(x.shape[0])
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains NaN or infinite values")
    return x


def check_design(X, n: int) -> np.ndarray:
    """Coerce a design to an ``(n, p)`` float matrix; ``None`` means ``p = 0``."""
    if X is None:
        return np.zeros((n, 0))
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != n:
        raise SizingError(f"design has shape {X.shape}, expected ({n}, p)")
    if not np.all(np.isfinite(X)):
        raise ValueError("design contains NaN or infinite values")
    return X


def check_full_rank(A: np.ndarray, what: str = "design") -> None:
    if A.shape[1] == 0:
        return
    if A.shape[0] < A.shape[1]:
        raise RankError(f"{what} has fewer rows ({A.shape[0]}) than columns ({A.shape[1]})")
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= 1e-10 * max(s[0], np.finfo(float).tiny):
        raise RankError(f"{what} is rank deficient (condition number {s[0] / max(s[-1], 1e-300):.3g})")
