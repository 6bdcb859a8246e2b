"""Monte Carlo harness for partially linear model estimators.

Data follow ``y = X beta + f(t) + u`` on ``t_i = i/n`` with
``X[:, j] = g_j(t) + eta_j`` and Gaussian noise.  The signal-to-noise ratio
of a component is ``sd(component) / sigma``.  Each replication draws from
its own child of one master ``SeedSequence``, so replication ``k`` can be
regenerated in isolation and results do not depend on the worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .plm import PlmConfig, fit_plm
from .robust import SolverOptions
from .validation import dyadic_exponent

__all__ = [
    "SCHEMA_VERSION",
    "Scenario",
    "Calibration",
    "McReport",
    "PRESETS",
    "make_test_function",
    "make_design",
    "calibrate",
    "make_estimators",
    "preset",
    "preset_estimators",
    "generate_replication",
    "run_monte_carlo",
]

SCHEMA_VERSION = 1
F_KINDS = ("sinusoid", "piecewise_constant")
PIECEWISE_LEVELS = (0.0, 3.0, -2.0, 1.5, 0.0)
PIECEWISE_BREAKS = (0.0, 0.2, 0.45, 0.6, 0.85, 1.0)
NAMED_DESIGNS = {
    "exp2": lambda t: 2.0**t,
    "gauss": lambda t: np.exp(-t * t),
    "cos": np.cos,
}


def grid(n: int) -> np.ndarray:
    return np.arange(1, n + 1) / n


def make_test_function(kind: str, n: int) -> np.ndarray:
    """Mean-zero test function sampled at ``t_i = i/n``, before SNR scaling."""
    if n < 8:
        raise ValueError("need n >= 8")
    t = grid(n)
    if kind == "sinusoid":
        f = np.sin(4 * np.pi * t)
    elif kind == "piecewise_constant":
        idx = np.searchsorted(PIECEWISE_BREAKS[1:-1], t, side="right")
        f = np.asarray(PIECEWISE_LEVELS)[idx]
    else:
        raise ValueError(f"unknown test function {kind!r}; choose from {F_KINDS}")
    return f - f.mean()


def _design_function(spec):
    if isinstance(spec, str):
        try:
            return NAMED_DESIGNS[spec]
        except KeyError:
            raise ValueError(f"unknown design function {spec!r}") from None
    coeffs = np.asarray(spec, dtype=float)
    # ascending powers
    return lambda t: np.polynomial.polynomial.polyval(t, coeffs)


@dataclass(frozen=True)
class Scenario:
    n: int = 256
    f_kind: str = "sinusoid"
    g_polys: tuple = ((0.0, 2.0, 0.0, 0.0, 0.0, 1.0),)
    eta_sd: float = 1.0
    snr_f: float = 2.2
    snr_lin: float = 4.38
    beta_true: tuple = (1.0,)
    sigma: float = 0.5
    seed: int = 0
    replications: int = 500
    name: str = "custom"

    def __post_init__(self):
        dyadic_exponent(self.n)
        if self.f_kind not in F_KINDS:
            raise ValueError(f"unknown test function {self.f_kind!r}")
        if len(self.g_polys) != len(self.beta_true):
            raise ValueError("need one design function per coefficient")
        if not (self.snr_f > 0 and self.snr_lin > 0):
            raise ValueError("SNR targets must be positive")
        if self.sigma <= 0 or self.eta_sd < 0:
            raise ValueError("sigma must be positive and eta_sd non-negative")
        if self.replications < 1:
            raise ValueError("need at least one replication")

    @property
    def p(self) -> int:
        return len(self.beta_true)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["g_polys"] = [g if isinstance(g, str) else list(g) for g in self.g_polys]
        d["beta_true"] = list(self.beta_true)
        return d


def make_design(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """``X[i, j] = g_j(t_i) + eta_ij`` with ``eta ~ N(0, eta_sd**2)``."""
    t = grid(scenario.n)
    cols = [_design_function(g)(t) for g in scenario.g_polys]
    X = np.column_stack(cols) if cols else np.zeros((scenario.n, 0))
    if scenario.eta_sd > 0 and X.shape[1]:
        X = X + scenario.eta_sd * rng.standard_normal(X.shape)
    return X


class Calibration(NamedTuple):
    f: np.ndarray
    linear: np.ndarray | None
    sigma: float
    snr_f: float
    snr_lin: float


def calibrate(scenario: Scenario, X=None) -> Calibration:
    """Scale the test function so that ``sd(f) / sigma == snr_f``.

    The linear part is not rescaled; its achieved SNR is reported for the
    given design ``X``.
    """
    f0 = make_test_function(scenario.f_kind, scenario.n)
    sd = f0.std()
    if sd == 0:
        raise ValueError("test function has zero variance")
    f = f0 * (scenario.snr_f * scenario.sigma / sd)
    linear, snr_lin = None, float("nan")
    if X is not None:
        linear = np.asarray(X, dtype=float) @ np.asarray(scenario.beta_true, dtype=float)
        if linear.std() == 0:
            raise ValueError("linear component has zero variance")
        snr_lin = float(linear.std() / scenario.sigma)
    return Calibration(f, linear, scenario.sigma, float(f.std() / scenario.sigma), snr_lin)


PRESETS = {
    "example1": dict(name="example1", f_kind="sinusoid"),
    "example2": dict(name="example2", f_kind="piecewise_constant"),
    "example3": dict(
        name="example3",
        f_kind="piecewise_constant",
        g_polys=((0.0, 2.0, 0.0, 0.0, 0.0, 1.0), (0.0, 0.0, 1.0), (1.0, -1.0), (0.0, 0.0, 0.0, 1.0)),
        beta_true=(-1.0, 3.0, 0.0, 8.0),
        snr_f=4.38,
        snr_lin=5.99,
    ),
}
# full-depth transform: only the single coarsest scaling coefficient is unpenalized
PRESET_J0 = 0
ESTIMATORS = ("backfit", "artur", "legend")


def preset(name: str, **overrides) -> Scenario:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return Scenario(**{**base, **overrides})


def make_estimators(names=ESTIMATORS, *, j0: int = PRESET_J0, filter: str = "sym8",
                    max_iter: int = 2000, sigma_method: str = "qr") -> dict:
    """Estimator configurations keyed by label; tolerances follow the simulation defaults."""
    out = {}
    for name in names:
        if name not in ESTIMATORS:
            raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")
        delta = 1e-20 if name == "backfit" else None
        out[name] = PlmConfig(filter=filter, j0=j0, sigma_method=sigma_method,
                              solver=SolverOptions(name, delta, max_iter))
    return out


def preset_estimators(names=ESTIMATORS, **kw) -> dict:
    return make_estimators(names, **kw)


def replication_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))


def generate_replication(scenario: Scenario, k: int):
    """Return ``(y, X, f)`` for replication ``k``."""
    rng = replication_rng(scenario.seed, k)
    X = make_design(scenario, rng)
    cal = calibrate(scenario, X)
    u = scenario.sigma * rng.standard_normal(scenario.n)
    return cal.linear + cal.f + u, X, cal.f


def _run_one(args) -> list[dict]:
    scenario, estimators, k = args
    y, X, f = generate_replication(scenario, k)
    beta_true = np.asarray(scenario.beta_true)
    rows = []
    for label, config in estimators.items():
        rec = {"replication": k, "estimator": label}
        try:
            fit = fit_plm(y, X, config)
        except (ValueError, np.linalg.LinAlgError) as exc:
            rec.update(failed=True, error=f"{type(exc).__name__}: {exc}")
            rows.append(rec)
            continue
        rec.update(
            failed=False,
            error="",
            beta=fit.beta_hat.tolist(),
            sigma_hat=fit.sigma_hat.sigma_hat,
            sigma_naive=fit.diagnostics["sigma_naive"],
            lam=fit.lam,
            mise=float(np.mean((fit.f_hat - f) ** 2)),
            beta_sqerr=float(np.sum((fit.beta_hat - beta_true) ** 2)),
            iterations=int(fit.solver.iterations),
            converged=bool(fit.solver.converged),
            wall_time=float(fit.solver.wall_time),
        )
        rows.append(rec)
    return rows


def _mean_sd(values):
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        return float("nan"), float("nan")
    sd = float(a.std(axis=0, ddof=1)) if a.ndim == 1 and a.size > 1 else 0.0
    return float(a.mean(axis=0)), sd


def aggregate(records: list[dict], scenario: Scenario, labels) -> dict:
    """Per-estimator summary statistics computed from replication records."""
    out = {}
    p = scenario.p
    for label in labels:
        rows = [r for r in records if r["estimator"] == label]
        ok = [r for r in rows if not r["failed"]]
        betas = np.asarray([r["beta"] for r in ok], dtype=float).reshape(len(ok), p)
        if len(ok) > 1:
            beta_sd = betas.std(axis=0, ddof=1).tolist()
        else:
            beta_sd = [0.0] * p
        summary = {
            "replications": len(rows),
            "failures": len(rows) - len(ok),
            "converged": int(sum(r["converged"] for r in ok)),
            "beta_mean": betas.mean(axis=0).tolist() if ok else [float("nan")] * p,
            "beta_sd": beta_sd,
            "beta_mse": float(np.mean([r["beta_sqerr"] for r in ok])) if ok else float("nan"),
            "mean_abs_beta_error": float(np.mean(np.abs(betas - np.asarray(scenario.beta_true)))) if ok else float("nan"),
            "mise_f": _mean_sd([r["mise"] for r in ok])[0],
            "sigma_mean": _mean_sd([r["sigma_hat"] for r in ok])[0],
            "sigma_sd": _mean_sd([r["sigma_hat"] for r in ok])[1],
            "sigma_naive_mean": _mean_sd([r["sigma_naive"] for r in ok])[0],
            "sigma_naive_sd": _mean_sd([r["sigma_naive"] for r in ok])[1],
            "mean_iterations": _mean_sd([r["iterations"] for r in ok])[0],
            "mean_wall_time": _mean_sd([r["wall_time"] for r in ok])[0],
        }
        out[label] = summary
    return out


TIMING_KEYS = ("mean_wall_time",)


@dataclass
class McReport:
    scenario: Scenario
    estimators: dict
    records: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)

    def recompute(self) -> dict:
        return aggregate(self.records, self.scenario, list(self.estimators))

    def csv_columns(self) -> list[str]:
        betas = [f"beta_{j + 1}" for j in range(self.scenario.p)]
        return ["replication", "estimator", *betas, "sigma_hat", "sigma_naive", "lambda",
                "mise", "beta_sqerr", "iterations", "converged", "failed", "error"]

    def to_csv(self, *, include_timing: bool = False) -> str:
        """One row per (replication, estimator); wall times only on request."""
        cols = self.csv_columns() + (["wall_time"] if include_timing else [])
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, restval="", lineterminator="\n")
        w.writeheader()
        for r in self.records:
            row = {"replication": r["replication"], "estimator": r["estimator"],
                   "failed": int(r["failed"]), "error": r["error"]}
            if not r["failed"]:
                row.update({f"beta_{j + 1}": _num(b) for j, b in enumerate(r["beta"])})
                row.update(sigma_hat=_num(r["sigma_hat"]), sigma_naive=_num(r["sigma_naive"]),
                           mise=_num(r["mise"]), beta_sqerr=_num(r["beta_sqerr"]),
                           iterations=r["iterations"], converged=int(r["converged"]))
                row["lambda"] = _num(r["lam"])
                if include_timing:
                    row["wall_time"] = _num(r["wall_time"])
            w.writerow(row)
        return buf.getvalue()

    def to_dict(self, *, include_timing: bool = False) -> dict:
        aggs = {}
        for label, a in self.aggregates.items():
            aggs[label] = {k: v for k, v in a.items() if include_timing or k not in TIMING_KEYS}
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario.to_dict(),
            "estimators": {k: v.to_dict() for k, v in self.estimators.items()},
            "aggregates": aggs,
        }

    def to_json(self, *, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing=include_timing), indent=2, sort_keys=True) + "\n"

    def format_table(self, *, include_timing: bool = True) -> str:
        """Text table with ``mean(sd)`` cells, one column per estimator."""
        labels = list(self.aggregates)
        width = 20
        lines = [f"{self.scenario.name}: n={self.scenario.n}, replications={self.scenario.replications}"]
        lines.append("".ljust(26) + "".join(lab.rjust(width) for lab in labels))
        for j, b in enumerate(self.scenario.beta_true):
            cells = [
                f"{self.aggregates[l]['beta_mean'][j]:.4f}({self.aggregates[l]['beta_sd'][j]:.4f})"
                for l in labels
            ]
            lines.append(f"beta_{j + 1} (true {b:g})".ljust(26) + "".join(c.rjust(width) for c in cells))
        rows = [("beta MSE", "beta_mse", "{:.4f}"), ("MISE f", "mise_f", "{:.4f}"),
                ("mean iterations", "mean_iterations", "{:.1f}")]
        if include_timing:
            rows.append(("mean solver time [s]", "mean_wall_time", "{:.5f}"))
        for title, key, fmt in rows:
            lines.append(title.ljust(26) + "".join(fmt.format(self.aggregates[l][key]).rjust(width) for l in labels))
        first = self.aggregates[labels[0]]
        lines.append(
            f"sigma (true {self.scenario.sigma:g}): with QR "
            f"{first['sigma_mean']:.4f}({first['sigma_sd']:.4f}), without QR "
            f"{first['sigma_naive_mean']:.4f}({first['sigma_naive_sd']:.4f})"
        )
        fails = {l: a["failures"] for l, a in self.aggregates.items() if a["failures"]}
        if fails:
            lines.append(f"failures: {fails}")
        return "\n".join(lines)


def _num(x) -> str:
    x = float(x)
    return format(x, ".17g") if math.isfinite(x) else ""


def run_monte_carlo(scenario: Scenario, estimators: dict | None = None, *, jobs: int = 1) -> McReport:
    """Fit every estimator on identical data for each replication and aggregate."""
    estimators = estimators if estimators is not None else make_estimators()
    if not estimators:
        raise ValueError("need at least one estimator")
    tasks = [(scenario, estimators, k) for k in range(scenario.replications)]
    if jobs > 1:
        chunk = max(1, len(tasks) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=chunk))
    else:
        results = [_run_one(t) for t in tasks]
    records = [row for rows in results for row in rows]
    report = McReport(scenario, dict(estimators), records)
    report.aggregates = report.recompute()
    return report


def with_overrides(scenario: Scenario, **kw) -> Scenario:
    return replace(scenario, **{k: v for k, v in kw.items() if v is not None})
