"""Two-step wavelet estimator for the partially linear model y = X beta + f(t) + u.

1. ``Z = W y`` and ``A = W X`` (orthogonal periodic DWT).
2. sigma from the MAD of the finest-level response coefficients after
   projecting out ``span(A_fine)`` with a complete QR factorization.
3. ``lam = sigma * sqrt(2 log n)`` unless fixed.
4. ``beta`` minimizes ``sum_{i >= i0} rho_lam(z_i - A_i beta)`` (Huber for
   soft thresholding) with a half-quadratic solver, or jointly with theta by
   backfitting.
5. ``theta_i = z_i - A_i beta`` on the scaling block, ``gamma_lam(.)``
   elsewhere, and ``f = W^T theta``.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .backfit import BackfitOptions, backfit_plm, plm_criterion
from .dwt import DEFAULT_J0, dwt_matrix_columns, idwt_matrix_columns
from .filters import get_filter
from .robust import RhoFamily, SolverOptions, SolverResult, rho_for_rule, robust_fit
from .threshold import (
    SCAD_A,
    SigmaEstimate,
    apply_rule,
    estimate_sigma_mad,
    estimate_sigma_qr,
    universal_threshold,
)
from .validation import SizingError, check_design, check_full_rank, check_signal, dyadic_exponent

__all__ = [
    "SCHEMA_VERSION",
    "PlmConfig",
    "PlmFit",
    "fit_plm",
    "equivalence_check",
    "fit_from_dict",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PlmConfig:
    """Settings of the two-step estimator.

    ``lam=None`` selects the universal threshold and ``sigma=None`` the
    QR+MAD noise estimate; ``sigma_method="mad"`` skips the QR projection
    (kept for comparison only).  ``transform="identity"`` treats the inputs
    as already being wavelet coefficients.
    """

    filter: str = "sym8"
    j0: int = DEFAULT_J0
    rule: str = "soft"
    scad_a: float = SCAD_A
    lam: float | None = None
    sigma: float | None = None
    sigma_method: str = "qr"
    solver: SolverOptions = field(default_factory=SolverOptions)
    transform: str = "dwt"

    def __post_init__(self):
        if self.transform not in ("dwt", "identity"):
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.transform == "dwt":
            get_filter(self.filter)
        if self.rule not in ("soft", "hard", "scad"):
            raise ValueError(f"unknown threshold rule {self.rule!r}")
        if self.rule == "scad" and not self.scad_a > 2:
            raise ValueError("SCAD parameter a must exceed 2")
        if self.j0 < 0:
            raise ValueError("j0 must be non-negative")
        if self.lam is not None and self.lam < 0:
            raise ValueError("fixed lambda must be non-negative")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("fixed sigma must be non-negative")
        if self.sigma_method not in ("qr", "mad"):
            raise ValueError(f"unknown sigma method {self.sigma_method!r}")
        if self.solver.algorithm == "backfit" and self.rule != "soft":
            raise ValueError("backfitting is only defined for the l1 (soft) penalty")

    @property
    def lambda_mode(self) -> str:
        return "universal" if self.lam is None else "fixed"

    @property
    def sigma_mode(self) -> str:
        return "fixed" if self.sigma is not None else ("qr_mad" if self.sigma_method == "qr" else "mad")

    def with_solver(self, **kw) -> "PlmConfig":
        return replace(self, solver=replace(self.solver, **kw))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solver"]["delta"] = self.solver.tol
        d["lambda_mode"] = self.lambda_mode
        d["sigma_mode"] = self.sigma_mode
        return d


@dataclass
class PlmFit:
    beta_hat: np.ndarray
    theta_hat: np.ndarray
    f_hat: np.ndarray
    sigma_hat: SigmaEstimate
    lam: float
    solver: SolverResult
    config: PlmConfig
    diagnostics: dict = field(default_factory=dict)

    @property
    def split_index(self) -> int:
        return self.diagnostics["split_index"]

    def fitted(self, X) -> np.ndarray:
        X = check_design(X, self.f_hat.size)
        return X @ self.beta_hat + self.f_hat

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "beta_hat": self.beta_hat.tolist(),
            "theta_hat": self.theta_hat.tolist(),
            "f_hat": self.f_hat.tolist(),
            "sigma_hat": self.sigma_hat.to_dict(),
            "lambda": float(self.lam),
            "solver": self.solver.to_dict(),
            "config": self.config.to_dict(),
            "diagnostics": self.diagnostics,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def fit_from_dict(d: dict) -> dict:
    """Parse a fit JSON document back into numpy arrays (schema check included)."""
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {d.get('schema_version')!r}")
    out = dict(d)
    for key in ("beta_hat", "theta_hat", "f_hat"):
        out[key] = np.asarray(d[key], dtype=float)
    return out


def _to_wavelet_domain(Y, X, config: PlmConfig):
    if config.transform == "identity":
        return Y.copy(), X.copy()
    Z = dwt_matrix_columns(Y[:, None], config.filter, config.j0)[:, 0]
    A = dwt_matrix_columns(X, config.filter, config.j0)
    return Z, A


def _from_wavelet_domain(theta, config: PlmConfig):
    if config.transform == "identity":
        return theta.copy()
    return idwt_matrix_columns(theta[:, None], config.filter, config.j0)[:, 0]


def _max_leverage(A) -> float:
    if A.shape[1] == 0:
        return 0.0
    Q, _ = np.linalg.qr(A)
    return float(np.max(np.sum(Q * Q, axis=1)))


def fit_plm(Y, X, config: PlmConfig | None = None) -> PlmFit:
    """Fit the partially linear model on a dyadic equispaced grid.

    Parameters
    ----------
    Y : array_like, shape (n,)
        Responses, ``n = 2**J``.
    X : array_like, shape (n, p) or None
        Covariates; ``None`` or ``p = 0`` reduces to plain wavelet denoising.
    config : PlmConfig

    Returns
    -------
    PlmFit
        Solver non-convergence is reported in ``fit.solver.converged``, it is
        not raised.
    """
    config = config or PlmConfig()
    Y = check_signal(Y)
    n = Y.size
    J = dyadic_exponent(n)
    if config.j0 >= J:
        raise SizingError(f"j0={config.j0} must be smaller than J={J}")
    X = check_design(X, n)
    p = X.shape[1]
    if p >= n // 2:
        raise SizingError(f"need p < n/2, got p={p}, n={n}")
    check_full_rank(X)

    Z, A = _to_wavelet_domain(Y, X, config)
    i0 = 2**config.j0 + 1
    fine = slice(n // 2, n)

    naive = estimate_sigma_mad(Z[fine])
    if config.sigma is not None:
        sigma = SigmaEstimate(float(config.sigma), "fixed", 0)
    elif config.sigma_method == "mad":
        sigma = naive
    else:
        sigma = estimate_sigma_qr(A[fine], Z[fine])
    lam = universal_threshold(sigma.sigma_hat, n) if config.lam is None else float(config.lam)

    opts = config.solver
    pen = slice(i0 - 1, n)
    check_full_rank(A[pen], "penalized design block")
    if lam == 0.0 or p == 0:
        # every beta minimizes the criterion at lam = 0; take full-sample OLS
        t0 = time.perf_counter()
        beta = np.linalg.lstsq(A, Z, rcond=None)[0] if p else np.zeros(0)
        solver = SolverResult(beta, 0, True, time.perf_counter() - t0, 0.0, 0.0)
    elif opts.algorithm == "backfit":
        bf = backfit_plm(Z, A, i0, BackfitOptions(lam, opts.tol, opts.max_iter, opts.track_objective))
        beta = bf.beta_hat
        crit = plm_criterion(Z, A, beta, _theta(Z - A @ beta, i0, lam, config), i0, lam)
        change = float("nan")
        solver = SolverResult(beta, bf.iterations, bf.converged, bf.wall_time, crit, change,
                              bf.criterion_history)
    else:
        rho = rho_for_rule(config.rule, lam, config.scad_a)
        solver = robust_fit(A[pen], Z[pen], rho, opts)
        beta = solver.beta_hat

    theta = _theta(Z - A @ beta, i0, lam, config)
    f_hat = _from_wavelet_domain(theta, config)
    diagnostics = {
        "n": n,
        "p": p,
        "split_index": i0,
        "sigma_naive": naive.sigma_hat,
        "max_leverage": _max_leverage(A),
    }
    return PlmFit(beta, theta, f_hat, sigma, lam, solver, config, diagnostics)


def _theta(resid, i0, lam, config: PlmConfig) -> np.ndarray:
    theta = np.array(resid, dtype=float, copy=True)
    theta[i0 - 1:] = apply_rule(config.rule, theta[i0 - 1:], lam, config.scad_a)
    return theta


def equivalence_check(Y, X, config: PlmConfig, *, delta: float = 1e-12, max_iter: int = 200_000) -> dict:
    """Compare the two-step fit with joint minimization by backfitting.

    Both sides minimize the same criterion, so for a convex (soft) penalty
    the solutions coincide.  Requires a fixed or universal lambda; the
    backfit run uses the lambda realized by the two-step fit.
    """
    if config.rule != "soft":
        raise ValueError("the equivalence holds for the soft rule / l1 penalty")
    fit = fit_plm(Y, X, config)
    Y = check_signal(Y)
    X = check_design(X, Y.size)
    Z, A = _to_wavelet_domain(Y, X, config)
    i0 = fit.split_index
    bf = backfit_plm(Z, A, i0, BackfitOptions(fit.lam, delta, max_iter))
    # the last backfit half-step is a beta-step; realign theta with it
    theta_bf = _theta(Z - A @ bf.beta_hat, i0, fit.lam, config)
    return {
        "delta_beta": float(np.linalg.norm(fit.beta_hat - bf.beta_hat)),
        "delta_theta_inf": float(np.max(np.abs(fit.theta_hat - theta_bf))),
        "criterion_two_step": plm_criterion(Z, A, fit.beta_hat, fit.theta_hat, i0, fit.lam),
        "criterion_backfit": plm_criterion(Z, A, bf.beta_hat, theta_bf, i0, fit.lam),
        "backfit_iterations": int(bf.iterations),
        "backfit_converged": bool(bf.converged),
        "lambda": float(fit.lam),
    }
