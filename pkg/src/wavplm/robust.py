"""Robust costs and half-quadratic solvers for sum_i rho(z_i - A_i^T beta).

Two solvers share one contract:

* :func:`artur_fit` -- multiplicative form (IRLS).  Weights ``psi(r)/r``;
  the weighted normal matrix is refactorized at every iteration.
* :func:`legend_fit` -- additive form (iterative modified residuals).
  Subtracts ``c = r - psi(r)`` from the response and reuses a single
  factorization of ``A``.

Both start from ordinary least squares and stop when
``||beta_new - beta|| / ||beta|| < delta`` (absolute change when
``||beta|| < 1e-12``).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .threshold import SCAD_A, apply_rule

__all__ = [
    "RhoFamily",
    "SolverOptions",
    "SolverResult",
    "SolverError",
    "huber_rho",
    "huber_psi",
    "huber_weight",
    "rho_for_rule",
    "artur_fit",
    "legend_fit",
    "robust_fit",
    "DEFAULT_DELTA",
]

DEFAULT_DELTA = {"artur": 1e-5, "legend": 1e-10}
KINDS = ("huber", "truncated_quadratic", "hampel_scad")


class SolverError(np.linalg.LinAlgError):
    """Weighted normal equations could not be solved."""


def _out(x):
    return x if np.ndim(x) else float(x)


def huber_rho(u, lam):
    u = np.abs(np.asarray(u, dtype=float))
    return _out(np.where(u <= lam, 0.5 * u * u, lam * u - 0.5 * lam * lam))


def huber_psi(u, lam):
    # minimum/maximum is measurably cheaper than np.clip on short vectors
    return _out(np.minimum(np.maximum(np.asarray(u, dtype=float), -lam), lam))


def huber_weight(r, lam):
    """``min(1, lam/|r|)`` with the limit value 1 at ``r = 0``."""
    a = np.abs(np.asarray(r, dtype=float))
    return _out(lam / np.maximum(a, lam))


def _trunc_rho(u, lam):
    u = np.asarray(u, dtype=float)
    return _out(0.5 * np.minimum(u * u, lam * lam))


def _trunc_psi(u, lam):
    u = np.asarray(u, dtype=float)
    return _out(np.where(np.abs(u) <= lam, u, 0.0))


def _hampel_rho(u, lam, a):
    u = np.abs(np.asarray(u, dtype=float))
    q = 0.5 * u * u
    lin = lam * u - 0.5 * lam * lam
    mid = 1.5 * lam * lam + (a * lam * (u - 2 * lam) - 0.5 * (u * u - 4 * lam * lam)) / (a - 2)
    top = 0.5 * (a + 1) * lam * lam
    return _out(np.where(u <= lam, q, np.where(u <= 2 * lam, lin, np.where(u <= a * lam, mid, top))))


def _hampel_psi(u, lam, a):
    u = np.asarray(u, dtype=float)
    au, s = np.abs(u), np.sign(u)
    mid = (a * lam * s - u) / (a - 2)
    return _out(
        np.where(au <= lam, u, np.where(au <= 2 * lam, lam * s, np.where(au <= a * lam, mid, 0.0)))
    )


@dataclass(frozen=True)
class RhoFamily:
    """Robust cost ``rho``, its derivative ``psi`` and IRLS weight ``psi(r)/r``.

    ``rho`` is the primitive of ``u - gamma(u)`` for the paired threshold rule
    ``gamma``: soft <-> Huber, hard <-> truncated quadratic (mean
    truncation), SCAD <-> Hampel's three-part redescending cost.
    """

    kind: str = "huber"
    lam: float = 1.0
    scad_a: float = SCAD_A

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown rho family {self.kind!r}; choose from {KINDS}")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.kind == "hampel_scad" and not self.scad_a > 2:
            raise ValueError("SCAD parameter a must exceed 2")

    @property
    def rule(self) -> str:
        return {"huber": "soft", "truncated_quadratic": "hard", "hampel_scad": "scad"}[self.kind]

    @property
    def convex(self) -> bool:
        return self.kind == "huber"

    def rho(self, u):
        if self.kind == "huber":
            return huber_rho(u, self.lam)
        if self.kind == "truncated_quadratic":
            return _trunc_rho(u, self.lam)
        return _hampel_rho(u, self.lam, self.scad_a)

    def psi(self, u):
        if self.kind == "huber":
            return huber_psi(u, self.lam)
        if self.kind == "truncated_quadratic":
            return _trunc_psi(u, self.lam)
        return _hampel_psi(u, self.lam, self.scad_a)

    def weight(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "huber":
            return huber_weight(r, self.lam)
        nz = r != 0
        w = np.ones_like(r)
        w[nz] = self.psi(r[nz]) / r[nz]
        return _out(w)

    def threshold(self, u):
        """The paired thresholding rule ``gamma(u) = u - psi(u)``."""
        return apply_rule(self.rule, u, self.lam, self.scad_a)

    def objective(self, r) -> float:
        return float(np.sum(self.rho(r)))


def rho_for_rule(rule: str, lam: float, scad_a: float = SCAD_A) -> RhoFamily:
    kind = {"soft": "huber", "hard": "truncated_quadratic", "scad": "hampel_scad"}.get(rule)
    if kind is None:
        raise ValueError(f"unknown threshold rule {rule!r}")
    return RhoFamily(kind, lam, scad_a)


@dataclass(frozen=True)
class SolverOptions:
    algorithm: str = "legend"
    delta: float | None = None
    max_iter: int = 2000
    track_objective: bool = False

    def __post_init__(self):
        if self.algorithm not in ("artur", "legend", "backfit"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")

    @property
    def tol(self) -> float:
        if self.delta is not None:
            return float(self.delta)
        return DEFAULT_DELTA.get(self.algorithm, 1e-20)


@dataclass
class SolverResult:
    beta_hat: np.ndarray
    iterations: int
    converged: bool
    wall_time: float
    criterion_value: float
    last_change: float = float("nan")
    objective_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "wall_time": float(self.wall_time),
            "criterion_value": float(self.criterion_value),
            "last_change": float(self.last_change),
        }


def _norm(v) -> float:
    return math.sqrt(float(v @ v))


def _rel_change(new, old) -> float:
    diff = _norm(new - old)
    ref = _norm(old)
    return diff / ref if ref >= 1e-12 else diff


def _check_problem(A, z):
    A = np.asarray(A, dtype=float)
    z = np.asarray(z, dtype=float).ravel()
    if A.ndim == 1:
        A = A[:, None]
    if A.shape[0] != z.size:
        raise ValueError(f"A has {A.shape[0]} rows but z has {z.size} entries")
    if A.shape[0] < A.shape[1]:
        raise SolverError("fewer penalized rows than covariates")
    return A, z


def _empty_result(rho, z, t0):
    return SolverResult(np.zeros(0), 0, True, time.perf_counter() - t0, rho.objective(z), 0.0)


def _ols_factor(A):
    """Thin QR of ``A``; returns ``(A^T A)^{-1} A^T``."""
    Q, R = np.linalg.qr(A)
    if np.abs(np.diag(R)).min() <= 1e-10 * np.abs(R).max():
        raise SolverError("penalized design block is rank deficient")
    return solve_triangular(R, Q.T, check_finite=False)


def _finish(rho, A, z, beta, it, converged, change, history, t0):
    wall = time.perf_counter() - t0
    return SolverResult(beta, it, converged, wall, rho.objective(z - A @ beta), change, history)


def artur_fit(A_pen, z_pen, rho: RhoFamily, opts: SolverOptions | None = None) -> SolverResult:
    """Iteratively reweighted least squares for ``min sum rho(z - A beta)``.

    Each iteration solves ``(A^T C A) beta = A^T C z`` with ``C = diag(psi(r)/r)``
    through a fresh Cholesky factorization.
    """
    opts = opts or SolverOptions("artur")
    t0 = time.perf_counter()
    A, z = _check_problem(A_pen, z_pen)
    if A.shape[1] == 0:
        return _empty_result(rho, z, t0)
    tol, track = opts.tol, opts.track_objective
    beta = _ols_factor(A) @ z
    history = [rho.objective(z - A @ beta)] if track else []
    converged, change, it = False, float("nan"), 0
    while it < opts.max_iter:
        w = rho.weight(z - A @ beta)
        Aw = A.T * w
        try:
            new = cho_solve(cho_factor(Aw @ A, check_finite=False), Aw @ z, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"weighted normal matrix is singular at iteration {it + 1}") from exc
        it += 1
        change = _rel_change(new, beta)
        beta = new
        if track:
            history.append(rho.objective(z - A @ beta))
        if change < tol:
            converged = True
            break
    return _finish(rho, A, z, beta, it, converged, change, history, t0)


def legend_fit(A_pen, z_pen, rho: RhoFamily, opts: SolverOptions | None = None) -> SolverResult:
    """Iterative modified residuals for ``min sum rho(z - A beta)``.

    ``beta <- P (z - c)`` with ``c = r - psi(r)`` and ``P = (A^T A)^{-1} A^T``
    computed once; since ``P A = I`` this is ``beta + P psi(r)``.
    """
    opts = opts or SolverOptions("legend")
    t0 = time.perf_counter()
    A, z = _check_problem(A_pen, z_pen)
    if A.shape[1] == 0:
        return _empty_result(rho, z, t0)
    tol, track = opts.tol, opts.track_objective
    P = _ols_factor(A)
    beta = P @ z
    history = [rho.objective(z - A @ beta)] if track else []
    converged, change, it = False, float("nan"), 0
    while it < opts.max_iter:
        step = P @ rho.psi(z - A @ beta)
        it += 1
        new = beta + step
        ref = _norm(beta)
        change = _norm(step)
        if ref >= 1e-12:
            change /= ref
        beta = new
        if track:
            history.append(rho.objective(z - A @ beta))
        if change < tol:
            converged = True
            break
    return _finish(rho, A, z, beta, it, converged, change, history, t0)


def robust_fit(A_pen, z_pen, rho: RhoFamily, opts: SolverOptions) -> SolverResult:
    if opts.algorithm == "artur":
        return artur_fit(A_pen, z_pen, rho, opts)
    if opts.algorithm == "legend":
        return legend_fit(A_pen, z_pen, rho, opts)
    raise ValueError(f"robust_fit does not handle algorithm {opts.algorithm!r}")
