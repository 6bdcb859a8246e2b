"""Thresholding rules and noise-level estimation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import RankError, SizingError

__all__ = [
    "MAD_CONSTANT",
    "SCAD_A",
    "ThresholdRule",
    "SigmaEstimate",
    "soft_threshold",
    "hard_threshold",
    "scad_threshold",
    "universal_threshold",
    "mad_sigma",
    "estimate_sigma_qr",
    "estimate_sigma_mad",
]

MAD_CONSTANT = 0.6745
SCAD_A = 3.7
RULES = ("soft", "hard", "scad")


def soft_threshold(u, lam):
    """``sign(u) * max(|u| - lam, 0)``."""
    u = np.asarray(u, dtype=float)
    out = np.sign(u) * np.maximum(np.abs(u) - lam, 0.0)
    return out if out.ndim else float(out)


def hard_threshold(u, lam):
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) > lam, u, 0.0)
    return out if out.ndim else float(out)


def scad_threshold(u, lam, a=SCAD_A):
    """SCAD rule: soft below ``2 lam``, identity above ``a lam``, linear between."""
    if a <= 2:
        raise ValueError("SCAD parameter a must exceed 2")
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    soft = np.sign(u) * np.maximum(au - lam, 0.0)
    mid = ((a - 1.0) * u - np.sign(u) * a * lam) / (a - 2.0)
    out = np.where(au <= 2 * lam, soft, np.where(au <= a * lam, mid, u))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ThresholdRule:
    kind: str = "soft"
    lam: float = 1.0
    scad_a: float = SCAD_A

    def __post_init__(self):
        if self.kind not in RULES:
            raise ValueError(f"unknown threshold rule {self.kind!r}; choose from {RULES}")
        if not self.lam > 0:
            raise ValueError("threshold must be positive")
        if self.kind == "scad" and not self.scad_a > 2:
            raise ValueError("SCAD parameter a must exceed 2")

    def __call__(self, u):
        return apply_rule(self.kind, u, self.lam, self.scad_a)


def apply_rule(kind: str, u, lam: float, scad_a: float = SCAD_A):
    if kind == "soft":
        return soft_threshold(u, lam)
    if kind == "hard":
        return hard_threshold(u, lam)
    if kind == "scad":
        return scad_threshold(u, lam, scad_a)
    raise ValueError(f"unknown threshold rule {kind!r}")


def universal_threshold(sigma: float, n: int) -> float:
    """VisuShrink threshold ``sigma * sqrt(2 log n)``."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if n < 2:
        raise ValueError("n must be at least 2")
    return float(sigma) * float(np.sqrt(2.0 * np.log(n)))


def mad_sigma(v) -> float:
    """Median absolute deviation scaled by 1/0.6745."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("cannot estimate sigma from an empty vector")
    return float(np.median(np.abs(v - np.median(v))) / MAD_CONSTANT)


@dataclass(frozen=True)
class SigmaEstimate:
    sigma_hat: float
    method: str
    n_used: int

    def to_dict(self) -> dict:
        return {"sigma_hat": self.sigma_hat, "method": self.method, "n_used": self.n_used}


def estimate_sigma_mad(z_fine) -> SigmaEstimate:
    """Plain MAD of the finest detail coefficients (biased under a linear part)."""
    z = np.asarray(z_fine, dtype=float)
    return SigmaEstimate(mad_sigma(z), "mad_finest", int(z.size))


def estimate_sigma_qr(A_fine, z_fine) -> SigmaEstimate:
    """MAD of the components of ``Q^T z_fine`` orthogonal to ``span(A_fine)``.

    ``A_fine = Q [R; 0]`` is a complete QR factorization; the trailing
    ``m - p`` rows of ``Q^T`` annihilate the linear part exactly.
    """
    z = np.asarray(z_fine, dtype=float).ravel()
    A = np.asarray(A_fine, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    m, p = A.shape
    if z.size != m:
        raise SizingError(f"A_fine has {m} rows but z_fine has {z.size} entries")
    if m <= p:
        raise SizingError(f"need more fine-level coefficients ({m}) than covariates ({p})")
    if p == 0:
        return SigmaEstimate(mad_sigma(z), "mad_qr", m)
    Q, R = np.linalg.qr(A, mode="complete")
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * np.linalg.norm(A):
        raise RankError("finest-level design block is rank deficient")
    resid = Q[:, p:].T @ z
    return SigmaEstimate(mad_sigma(resid), "mad_qr", m - p)
