"""scikit-learn compatible wrappers.

Both estimators operate along the *sample* axis: rows are the equispaced
design points ``t_i = i/n``, so the number of rows must be a power of two
and prediction is only defined on the grid the model was fitted on.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dwt import DEFAULT_J0, dwt_matrix_columns, idwt_matrix_columns
from .plm import PlmConfig, fit_plm
from .robust import SolverOptions
from .threshold import SCAD_A
from .validation import SizingError, dyadic_exponent

__all__ = ["WaveletTransform", "WaveletPLMRegressor"]


class WaveletTransform(TransformerMixin, BaseEstimator):
    """Column-wise orthonormal periodic DWT, ``A = W X``.

    Parameters
    ----------
    wavelet : {"haar", "db4", "sym8"}
    j0 : int
        Coarsest level of the pyramid.
    """

    def __init__(self, wavelet="sym8", j0=DEFAULT_J0):
        self.wavelet = wavelet
        self.j0 = j0

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_features=1)
        J = dyadic_exponent(X.shape[0])
        if not 0 <= self.j0 < J:
            raise SizingError(f"j0={self.j0} must lie in [0, {J})")
        self.n_samples_ = X.shape[0]
        self.n_features_in_ = X.shape[1]
        return self

    def _check(self, X):
        check_is_fitted(self, "n_samples_")
        X = check_array(X)
        if X.shape != (self.n_samples_, self.n_features_in_):
            raise SizingError(f"expected shape {(self.n_samples_, self.n_features_in_)}, got {X.shape}")
        return X

    def transform(self, X):
        return dwt_matrix_columns(self._check(X), self.wavelet, self.j0)

    def inverse_transform(self, A):
        return idwt_matrix_columns(self._check(A), self.wavelet, self.j0)


class WaveletPLMRegressor(RegressorMixin, BaseEstimator):
    """Partially linear model ``y = X beta + f(t) + u`` fitted in the wavelet domain.

    The linear part is a robust M-estimate on the penalized wavelet
    coefficients (Huber for ``rule="soft"``); ``f`` is recovered by
    thresholding the residual coefficients and inverting the transform.

    Parameters
    ----------
    wavelet, j0 :
        Transform settings.
    rule : {"soft", "hard", "scad"}
    lam : float or None
        Fixed threshold; ``None`` uses ``sigma * sqrt(2 log n)``.
    sigma : float or None
        Fixed noise level; ``None`` estimates it by QR + MAD.
    solver : {"legend", "artur", "backfit"}
    tol : float or None
        Relative-change stopping tolerance (solver default if ``None``).
    max_iter : int
    scad_a : float

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    f_hat_ : ndarray of shape (n_samples,)
        Estimated nonparametric component on the fitting grid.
    theta_ : ndarray of shape (n_samples,)
        Wavelet coefficients of ``f_hat_``.
    sigma_, lambda_ : float
    n_iter_ : int
    converged_ : bool
    fit_ : PlmFit
    """

    def __init__(self, wavelet="sym8", j0=DEFAULT_J0, rule="soft", lam=None, sigma=None,
                 solver="legend", tol=None, max_iter=2000, scad_a=SCAD_A):
        self.wavelet = wavelet
        self.j0 = j0
        self.rule = rule
        self.lam = lam
        self.sigma = sigma
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter
        self.scad_a = scad_a

    def get_config(self) -> PlmConfig:
        return PlmConfig(
            filter=self.wavelet,
            j0=self.j0,
            rule=self.rule,
            scad_a=self.scad_a,
            lam=self.lam,
            sigma=self.sigma,
            solver=SolverOptions(self.solver, self.tol, self.max_iter),
        )

    def fit(self, X, y):
        X = check_array(X, ensure_min_features=0)
        y = check_array(y, ensure_2d=False)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError(f"y must be 1-D with {X.shape[0]} entries")
        fit = fit_plm(y, X, self.get_config())
        self.fit_ = fit
        self.coef_ = fit.beta_hat
        self.f_hat_ = fit.f_hat
        self.theta_ = fit.theta_hat
        self.sigma_ = fit.sigma_hat.sigma_hat
        self.lambda_ = fit.lam
        self.n_iter_ = fit.solver.iterations
        self.converged_ = fit.solver.converged
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """``X @ coef_ + f_hat_`` on the fitting grid."""
        check_is_fitted(self, "coef_")
        X = check_array(X, ensure_min_features=0)
        if X.shape != (self.f_hat_.size, self.n_features_in_):
            raise SizingError(
                f"prediction needs the fitting grid: expected shape "
                f"{(self.f_hat_.size, self.n_features_in_)}, got {X.shape}"
            )
        return X @ self.coef_ + self.f_hat_

    def predict_linear(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, ensure_min_features=0)
        return X @ self.coef_

    def _more_tags(self):
        return {"requires_y": True, "allow_nan": False}
