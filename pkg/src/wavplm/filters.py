"""Orthonormal lowpass filters for the periodic DWT.

Taps are the minimum-phase Daubechies and least-asymmetric (Symmlet)
solutions of the spectral factorization, evaluated at 50 digits and rounded
to double precision.  Highpass taps are derived by the quadrature mirror
relation ``g[k] = (-1)**k * h[L-1-k]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["WaveletFilter", "get_filter", "available_filters"]

_TAPS = {
    "haar": (
        1,
        [0.7071067811865476, 0.7071067811865476],
    ),
    "db4": (
        4,
        [
            0.2303778133088965, 0.7148465705529157, 0.6308807679298589,
            -0.027983769416859854, -0.18703481171909309, 0.030841381835560764,
            0.0328830116668852, -0.010597401785069032,
        ],
    ),
    "sym8": (
        8,
        [
            -0.0033824159510050028, -0.0005421323318000107, 0.03169508781152599,
            0.007607487324976609, -0.14329423835127267, -0.061273359067811076,
            0.4813596512590534, 0.777185751699628, 0.36444189483617895,
            -0.0519458381078818, -0.027219029917103486, 0.04913717967373029,
            0.0038087520138944896, -0.014952258337062199, -0.0003029205147241331,
            0.001889950332767689,
        ],
    ),
}


@dataclass(frozen=True)
class WaveletFilter:
    """Lowpass filter of an orthonormal compactly supported wavelet."""

    name: str
    lowpass: tuple
    vanishing_moments: int

    def __post_init__(self):
        h = np.asarray(self.lowpass, dtype=float)
        if h.ndim != 1 or h.size < 2 or h.size % 2:
            raise ValueError(f"filter {self.name!r} needs an even number of taps")
        if abs(h @ h - 1.0) > 1e-12:
            raise ValueError(f"filter {self.name!r} taps are not unit norm")
        if abs(h.sum() - np.sqrt(2.0)) > 1e-12:
            raise ValueError(f"filter {self.name!r} taps do not sum to sqrt(2)")
        if self.vanishing_moments < 1:
            raise ValueError("vanishing_moments must be positive")

    @property
    def h(self) -> np.ndarray:
        return np.asarray(self.lowpass, dtype=float)

    @property
    def g(self) -> np.ndarray:
        h = self.h
        signs = (-1.0) ** np.arange(h.size)
        return signs * h[::-1]

    def __len__(self):
        return len(self.lowpass)


def available_filters() -> list[str]:
    return sorted(_TAPS)


def get_filter(name) -> WaveletFilter:
    """Look up a built-in filter by name; a ``WaveletFilter`` passes through."""
    if isinstance(name, WaveletFilter):
        return name
    key = str(name).lower()
    if key not in _TAPS:
        raise ValueError(
            f"unknown wavelet filter {name!r}; choose from {available_filters()}"
        )
    moments, taps = _TAPS[key]
    return WaveletFilter(key, tuple(taps), moments)
