"""Orthonormal periodic discrete wavelet transform (pyramid algorithm).

Coefficients are flattened as ``[scaling | details level j0 | ... | level J-1]``
so that the first ``2**j0`` entries are the unpenalized scaling block and the
last ``n/2`` entries are the finest details.  All transforms operate along
axis 0, which makes the matrix (column-wise) variant free.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .filters import WaveletFilter, get_filter
from .validation import SizingError, check_signal, dyadic_exponent

__all__ = [
    "DEFAULT_J0",
    "WaveletCoeffs",
    "dwt_forward",
    "dwt_inverse",
    "dwt_matrix_columns",
    "idwt_matrix_columns",
    "wavelet_matrix",
    "level_slices",
]

DEFAULT_J0 = 3


@dataclass
class WaveletCoeffs:
    """Scaling and detail coefficients of a length ``2**J`` signal."""

    j0: int
    J: int
    scaling: np.ndarray
    details: list = field(default_factory=list)

    def __post_init__(self):
        self.scaling = np.asarray(self.scaling, dtype=float)
        self.details = [np.asarray(d, dtype=float) for d in self.details]
        if not 0 <= self.j0 < self.J:
            raise SizingError(f"need 0 <= j0 < J, got j0={self.j0}, J={self.J}")
        if self.scaling.shape[0] != 2**self.j0:
            raise SizingError(f"scaling block has {self.scaling.shape[0]} rows, expected {2**self.j0}")
        if len(self.details) != self.J - self.j0:
            raise SizingError(f"expected {self.J - self.j0} detail levels, got {len(self.details)}")
        for j, d in zip(range(self.j0, self.J), self.details):
            if d.shape[0] != 2**j or d.shape[1:] != self.scaling.shape[1:]:
                raise SizingError(f"detail level {j} has shape {d.shape}, expected ({2**j}, ...)")

    @property
    def n(self) -> int:
        return 2**self.J

    @property
    def split_index(self) -> int:
        """First penalized position, 1-based (``2**j0 + 1``)."""
        return 2**self.j0 + 1

    def detail(self, j: int) -> np.ndarray:
        return self.details[j - self.j0]

    @property
    def finest(self) -> np.ndarray:
        return self.details[-1]

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.scaling, *self.details], axis=0)

    @classmethod
    def from_flat(cls, flat, j0: int) -> "WaveletCoeffs":
        flat = np.asarray(flat, dtype=float)
        J = dyadic_exponent(flat.shape[0])
        if not 0 <= j0 < J:
            raise SizingError(f"need 0 <= j0 < J, got j0={j0}, J={J}")
        sl = level_slices(J, j0)
        return cls(j0, J, flat[sl[0]], [flat[s] for s in sl[1:]])


def level_slices(J: int, j0: int) -> list[slice]:
    """Slices of the flat vector: scaling block first, then each detail level."""
    out = [slice(0, 2**j0)]
    for j in range(j0, J):
        out.append(slice(2**j, 2 ** (j + 1)))
    return out


def _check_levels(n: int, j0: int) -> int:
    J = dyadic_exponent(n)
    if j0 < 0:
        raise SizingError("j0 must be non-negative")
    if j0 >= J:
        raise SizingError(f"j0={j0} must be smaller than J={J} (n={n})")
    return J


def _analysis_step(a: np.ndarray, h: np.ndarray, g: np.ndarray):
    m = a.shape[0]
    base = 2 * np.arange(m // 2)
    lo = np.zeros((m // 2,) + a.shape[1:])
    hi = np.zeros_like(lo)
    for k in range(h.size):
        rows = a[(base + k) % m]
        lo += h[k] * rows
        hi += g[k] * rows
    return lo, hi


def _synthesis_step(lo: np.ndarray, hi: np.ndarray, h: np.ndarray, g: np.ndarray):
    m = 2 * lo.shape[0]
    base = 2 * np.arange(m // 2)
    out = np.zeros((m,) + lo.shape[1:])
    for k in range(h.size):
        # for fixed k the target indices are distinct, so fancy += is safe
        out[(base + k) % m] += h[k] * lo + g[k] * hi
    return out


def dwt_forward(signal, filter="sym8", j0: int = DEFAULT_J0) -> WaveletCoeffs:
    """Forward periodic DWT down to coarsest level ``j0``.

    Parameters
    ----------
    signal : array_like, shape (n,) or (n, p)
        Length ``n`` must be a power of two.  2-D input is transformed
        column by column.
    filter : str or WaveletFilter
    j0 : int
        Coarsest level; the result holds ``2**j0`` scaling coefficients.
    """
    x = check_signal(signal, allow_2d=True)
    wf = get_filter(filter)
    J = _check_levels(x.shape[0], j0)
    h, g = wf.h, wf.g
    details = []
    a = x
    for _ in range(J, j0, -1):
        a, d = _analysis_step(a, h, g)
        details.append(d)
    return WaveletCoeffs(j0, J, a, details[::-1])


def dwt_inverse(coeffs: WaveletCoeffs, filter="sym8") -> np.ndarray:
    """Inverse of :func:`dwt_forward` (the transpose of the orthogonal map)."""
    if not isinstance(coeffs, WaveletCoeffs):
        raise TypeError("dwt_inverse expects WaveletCoeffs; use WaveletCoeffs.from_flat")
    wf = get_filter(filter)
    h, g = wf.h, wf.g
    a = coeffs.scaling
    for d in coeffs.details:
        if d.shape[0] != a.shape[0]:
            raise SizingError("inconsistent coefficient levels")
        a = _synthesis_step(a, d, h, g)
    return a


def dwt_matrix_columns(X, filter="sym8", j0: int = DEFAULT_J0) -> np.ndarray:
    """Flattened DWT of every column of ``X`` (``A = W X``)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise SizingError(f"expected a 2-D matrix, got shape {X.shape}")
    if X.shape[1] == 0:
        _check_levels(X.shape[0], j0)
        return X.copy()
    return dwt_forward(X, filter, j0).flatten()


def idwt_matrix_columns(A, filter="sym8", j0: int = DEFAULT_J0) -> np.ndarray:
    """Inverse of :func:`dwt_matrix_columns` (``X = W^T A``)."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 2 and A.shape[1] == 0:
        _check_levels(A.shape[0], j0)
        return A.copy()
    return dwt_inverse(WaveletCoeffs.from_flat(A, j0), filter)


def wavelet_matrix(n: int, filter="sym8", j0: int = DEFAULT_J0) -> np.ndarray:
    """Explicit orthogonal matrix ``W`` with ``dwt_forward(x).flatten() == W @ x``."""
    return dwt_matrix_columns(np.eye(n), filter, j0)
