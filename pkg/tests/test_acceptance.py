"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""
import os
import time

import numpy as np
import pytest

from wavplm.cli import main as cli_main
from wavplm.dwt import dwt_forward, dwt_inverse
from wavplm.plm import PlmConfig, equivalence_check
from wavplm.robust import RhoFamily, SolverOptions, artur_fit, huber_psi, huber_rho, legend_fit
from wavplm.sim import make_estimators, preset, run_monte_carlo

SEED = 42
JOBS = max(1, min(4, os.cpu_count() or 1))


@pytest.fixture
def report(capsys):
    def _report(number, title, ok, detail, elapsed, limit):
        ok = bool(ok) and elapsed < limit
        with capsys.disabled():
            status = "PASS" if ok else "FAIL"
            print(f"\n[criterion {number}] {status} {title}: {detail}; runtime {elapsed:.1f}s (limit {limit:.0f}s)")
        return ok

    return _report


def by_label(rep, label):
    return [r for r in rep.records if r["estimator"] == label and not r["failed"]]


def test_c1_dwt_reconstruction_and_parseval(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst_rec, worst_energy = 0.0, 0.0
    for filt in ("haar", "db4", "sym8"):
        for n in (64, 256, 1024):
            for _ in range(100):
                x = rng.standard_normal(n)
                c = dwt_forward(x, filt, 3)
                worst_rec = max(worst_rec, np.max(np.abs(dwt_inverse(c, filt) - x)))
                e = x @ x
                worst_energy = max(worst_energy, abs(np.sum(c.flatten() ** 2) - e) / e)
    ok = worst_rec < 1e-10 and worst_energy < 1e-9
    elapsed = time.perf_counter() - t0
    assert report(1, "DWT perfect reconstruction and energy",
                  ok, f"max recon err {worst_rec:.2e}, max rel energy err {worst_energy:.2e}", elapsed, 5)


def test_c2_two_step_equals_joint_minimizer(report):
    t0 = time.perf_counter()
    worst_b, worst_t, count = 0.0, 0.0, 0
    for k in range(100):
        r = np.random.default_rng([SEED, k])
        p = 1 + k % 2
        lam = (0.5, 1.0, 2.0)[k % 3]
        X = r.standard_normal((32, p))
        t = np.arange(1, 33) / 32
        y = X @ r.normal(0, 2, p) + np.sin(2 * np.pi * t) + 0.5 * r.standard_normal(32)
        rep = equivalence_check(y, X, PlmConfig(lam=lam))
        worst_b = max(worst_b, rep["delta_beta"])
        worst_t = max(worst_t, rep["delta_theta_inf"])
        count += 1
    ok = worst_b < 1e-6 and worst_t < 1e-6
    elapsed = time.perf_counter() - t0
    assert report(2, "two-step fit vs coordinate descent", ok,
                  f"{count} instances, max |dbeta| {worst_b:.2e}, max |dtheta|inf {worst_t:.2e}", elapsed, 30)


def test_c3_sigma_estimation_table(report):
    t0 = time.perf_counter()
    rep = run_monte_carlo(preset("example1", replications=500, seed=SEED), make_estimators(["legend"]), jobs=JOBS)
    a = rep.aggregates["legend"]
    ok = 0.47 <= a["sigma_mean"] <= 0.53 and a["sigma_sd"] < 0.08 and a["sigma_naive_mean"] > 0.9
    elapsed = time.perf_counter() - t0
    assert report(3, "noise estimate with and without QR", ok,
                  f"QR {a['sigma_mean']:.4f}({a['sigma_sd']:.4f}), naive {a['sigma_naive_mean']:.4f}"
                  f"({a['sigma_naive_sd']:.4f})", elapsed, 120)


def test_c4_example1_example2_tables(report):
    t0 = time.perf_counter()
    ok, parts = True, []
    for name in ("example1", "example2"):
        rep = run_monte_carlo(preset(name, replications=500, seed=SEED), make_estimators(["artur", "legend"]), jobs=JOBS)
        a, b = rep.aggregates["artur"], rep.aggregates["legend"]
        same = round(a["beta_mean"][0], 4) == round(b["beta_mean"][0], 4)
        for agg in (a, b):
            ok &= abs(agg["beta_mean"][0] - 1) <= 0.10 and agg["beta_sd"][0] <= 0.06
            ok &= 0.05 <= agg["mise_f"] <= 0.20
        ok &= same
        parts.append(f"{name} beta {b['beta_mean'][0]:.4f}({b['beta_sd'][0]:.4f}) MISE {b['mise_f']:.4f}"
                     f" solvers equal to 4dp: {same}")
    elapsed = time.perf_counter() - t0
    assert report(4, "Example 1/2 solver tables", ok, "; ".join(parts), elapsed, 300)


def test_c5_legend_faster_than_artur(report):
    t0 = time.perf_counter()
    rep = run_monte_carlo(preset("example1", n=1024, replications=100, seed=SEED),
                          make_estimators(["artur", "legend"]), jobs=1)
    ta = np.mean([r["wall_time"] for r in by_label(rep, "artur")])
    tl = np.mean([r["wall_time"] for r in by_label(rep, "legend")])
    gap = max(np.max(np.abs(np.subtract(x["beta"], y["beta"])))
              for x, y in zip(by_label(rep, "artur"), by_label(rep, "legend")))
    ok = tl < ta and gap < 1e-5
    elapsed = time.perf_counter() - t0
    assert report(5, "LEGEND faster than ARTUR at n=1024", ok,
                  f"mean time LEGEND {tl * 1e3:.3f} ms vs ARTUR {ta * 1e3:.3f} ms, max beta gap {gap:.1e}",
                  elapsed, 300)


def test_c6_example3_half_quadratic_beats_backfitting(report):
    t0 = time.perf_counter()
    rep = run_monte_carlo(preset("example3", replications=200, seed=SEED), make_estimators(max_iter=2000), jobs=JOBS)
    agg = rep.aggregates
    bf, ar, le = agg["backfit"]["beta_mse"], agg["artur"]["beta_mse"], agg["legend"]["beta_mse"]
    ok = ar < bf and le < bf
    elapsed = time.perf_counter() - t0
    assert report(6, "Example 3 beta MSE below backfitting", ok,
                  f"MSE ARTUR {ar:.6f}, LEGEND {le:.6f}, backfitting {bf:.6f} "
                  f"(backfit mean iterations {agg['backfit']['mean_iterations']:.1f})", elapsed, 300)


def test_c7_consistency_trend(report):
    t0 = time.perf_counter()
    est = make_estimators(["legend"])
    small = run_monte_carlo(preset("example1", n=256, replications=200, seed=SEED), est, jobs=JOBS).aggregates["legend"]
    large = run_monte_carlo(preset("example1", n=1024, replications=200, seed=SEED), est, jobs=JOBS).aggregates["legend"]
    ok = (large["mean_abs_beta_error"] < small["mean_abs_beta_error"]) and (large["mise_f"] < small["mise_f"])
    elapsed = time.perf_counter() - t0
    assert report(7, "error shrinks from n=256 to n=1024", ok,
                  f"mean|beta err| {small['mean_abs_beta_error']:.4f} -> {large['mean_abs_beta_error']:.4f}, "
                  f"MISE {small['mise_f']:.4f} -> {large['mise_f']:.4f}", elapsed, 300)


def test_c8_robust_solver_invariants(report):
    t0 = time.perf_counter()
    checks = {}
    mono, stat, ols_gap = True, 0.0, 0.0
    for k in range(20):
        r = np.random.default_rng([SEED, k])
        A = r.standard_normal((128, 2))
        z = A @ r.normal(0, 2, 2) + 0.5 * r.standard_normal(128)
        z[r.choice(128, 8, replace=False)] += r.normal(0, 10, 8)
        rho = RhoFamily("huber", 1.0)
        for name, solver in (("artur", artur_fit), ("legend", legend_fit)):
            h = np.asarray(solver(A, z, rho, SolverOptions(name, track_objective=True)).objective_history)
            mono &= bool(np.all(np.diff(h) <= 1e-12 * h[0]))
            beta = solver(A, z, rho, SolverOptions(name, 1e-10)).beta_hat
            psi = rho.psi(z - A @ beta)
            stat = max(stat, np.linalg.norm(A.T @ psi) / max(1.0, np.linalg.norm(A.T @ np.abs(psi))))
            ols = np.linalg.lstsq(A, z, rcond=None)[0]
            big = RhoFamily("huber", 10 * np.max(np.abs(z - A @ ols)))
            ols_gap = max(ols_gap, np.max(np.abs(solver(A, z, big, SolverOptions(name)).beta_hat - ols)))
    checks["monotone"] = mono
    checks["stationary"] = stat <= 1e-6
    checks["ols_limit"] = ols_gap <= 1e-8
    u = np.linspace(-10, 10, 4001)
    scale_err = max(np.max(np.abs(huber_rho(u, lam) - v**2 * huber_rho(u / v, lam / v)))
                    for lam in (0.3, 1.0, 4.0) for v in (0.2, 0.5, 3.0, 11.0))
    checks["scale"] = scale_err <= 1e-12
    fd_u = u[np.abs(np.abs(u) - 1.0) > 1e-3]
    fd = (huber_rho(fd_u + 1e-6, 1.0) - huber_rho(fd_u - 1e-6, 1.0)) / 2e-6
    fd_err = np.max(np.abs(fd - huber_psi(fd_u, 1.0)))
    checks["psi_fd"] = fd_err <= 1e-6
    ok = all(checks.values())
    elapsed = time.perf_counter() - t0
    assert report(8, "robust solver invariants", ok,
                  f"monotone {mono}, stationarity {stat:.1e}, OLS limit {ols_gap:.1e}, "
                  f"scale relation {scale_err:.1e}, psi vs FD {fd_err:.1e}", elapsed, 10)


def test_c9_simulate_determinism(tmp_path, report):
    t0 = time.perf_counter()
    outputs = {}
    for jobs in (1, 4):
        for run in (0, 1):
            d = tmp_path / f"j{jobs}r{run}"
            code = cli_main(["simulate", "--preset", "example2", "--reps", "12", "--seed", "7",
                             "--jobs", str(jobs), "--out-dir", str(d), "--quiet"])
            assert code == 0
            outputs[jobs, run] = ((d / "example2.csv").read_bytes(), (d / "example2.json").read_bytes())
    ok = len(set(outputs.values())) == 1
    elapsed = time.perf_counter() - t0
    assert report(9, "simulate byte-identical across reruns and --jobs 1/4", ok,
                  f"{len(outputs)} runs, {len(set(outputs.values()))} distinct output set(s)", elapsed, 60)
