"""Wavelet-thresholding estimation of partially linear models."""
from .dwt import WaveletCoeffs, dwt_forward, dwt_inverse, dwt_matrix_columns, wavelet_matrix
from .filters import WaveletFilter, get_filter
from .plm import PlmConfig, PlmFit, equivalence_check, fit_plm
from .robust import RhoFamily, SolverOptions, artur_fit, legend_fit
from .threshold import estimate_sigma_qr, mad_sigma, soft_threshold, universal_threshold

__version__ = "0.1.0"

__all__ = [
    "WaveletCoeffs",
    "WaveletFilter",
    "PlmConfig",
    "PlmFit",
    "RhoFamily",
    "SolverOptions",
    "artur_fit",
    "dwt_forward",
    "dwt_inverse",
    "dwt_matrix_columns",
    "equivalence_check",
    "estimate_sigma_qr",
    "fit_plm",
    "get_filter",
    "legend_fit",
    "mad_sigma",
    "soft_threshold",
    "universal_threshold",
    "wavelet_matrix",
]
