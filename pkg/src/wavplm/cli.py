"""Command-line front end: ``wavplm fit | simulate | transform``.

Every subcommand accepts ``--config FILE``: plain ``key = value`` lines
(``#`` starts a comment) whose keys are the long option names with
dashes or underscores.  Explicit flags override config-file values and
unknown keys are rejected.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dwt import DEFAULT_J0, WaveletCoeffs, dwt_forward, dwt_inverse
from .filters import available_filters
from .plm import PlmConfig, fit_plm
from .robust import SolverOptions
from .sim import ESTIMATORS, PRESET_J0, PRESETS, make_estimators, preset, run_monte_carlo
from .validation import RankError, SizingError, dyadic_exponent

EXIT_OK, EXIT_INPUT, EXIT_NOCONV = 0, 1, 2


class CliError(Exception):
    """Malformed input or options; reported on stderr with exit code 1."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def read_csv_columns(path) -> tuple[list[str], dict[str, np.ndarray]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows:
        raise CliError(f"{path}: empty file (a header row is required)")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in body])
        except (ValueError, IndexError) as exc:
            raise CliError(f"{path}: column {name!r} has a missing or non-numeric value") from exc
    return header, cols


def write_csv(path, header, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([v if isinstance(v, (str, int)) and not isinstance(v, bool) else _fmt(v) for v in row])


# -- config handling -------------------------------------------------------

def load_config_file(path) -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise CliError(f"malformed config file {path}: {exc}") from exc
    return {k.strip().replace("-", "_"): v.strip() for k, v in parser["config"].items()}


def merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    """Fill options left at their default from ``--config``; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    values = load_config_file(args.config)
    actions = {a.dest: a for a in parser._actions if a.dest not in ("help", "config", "command")}
    explicit = getattr(args, "_explicit", set())
    for key, raw in values.items():
        if key not in actions:
            raise CliError(f"unknown config key {key!r}")
        if key in explicit:
            continue
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                value = action.type(raw) if action.type else raw
            except (TypeError, ValueError) as exc:
                raise CliError(f"config key {key!r}: invalid value {raw!r}") from exc
            if action.choices and value not in action.choices:
                raise CliError(f"config key {key!r}: {value!r} not in {sorted(action.choices)}")
        setattr(args, key, value)
    return args


class _Tracking(argparse.Action):
    """Store action that remembers which options were given explicitly."""

    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        explicit = getattr(namespace, "_explicit", set())
        explicit.add(self.dest)
        namespace._explicit = explicit


class _TrackingTrue(argparse._StoreTrueAction):
    def __call__(self, parser, namespace, values, option_string=None):
        super().__call__(parser, namespace, values, option_string)
        explicit = getattr(namespace, "_explicit", set())
        explicit.add(self.dest)
        namespace._explicit = explicit


def _add(p, *names, **kw):
    if kw.get("action") == "store_true":
        kw["action"] = _TrackingTrue
    else:
        kw.setdefault("action", _Tracking)
    return p.add_argument(*names, **kw)


# -- fit ----------------------------------------------------------------------

def _plm_options(p):
    _add(p, "--filter", default="sym8", choices=available_filters())
    _add(p, "--j0", type=int, default=DEFAULT_J0, help="coarsest level (default %(default)s)")
    _add(p, "--rule", default="soft", choices=["soft", "hard", "scad"])
    _add(p, "--scad-a", type=float, default=3.7)
    _add(p, "--lambda-mode", default="universal", choices=["universal", "fixed"])
    _add(p, "--lambda", dest="lam", type=float, default=None, help="threshold for --lambda-mode fixed")
    _add(p, "--sigma", type=float, default=None, help="fixed noise sd (default: QR+MAD estimate)")
    _add(p, "--solver", default="legend", choices=list(ESTIMATORS))
    _add(p, "--tol", type=float, default=None, help="relative-change tolerance")
    _add(p, "--max-iter", type=int, default=2000)


def build_plm_config(args) -> PlmConfig:
    if args.lambda_mode == "fixed" and args.lam is None:
        raise CliError("--lambda-mode fixed requires --lambda")
    if args.lambda_mode == "universal" and args.lam is not None:
        raise CliError("--lambda is only used with --lambda-mode fixed")
    try:
        return PlmConfig(
            filter=args.filter,
            j0=args.j0,
            rule=args.rule,
            scad_a=args.scad_a,
            lam=args.lam,
            sigma=args.sigma,
            solver=SolverOptions(args.solver, args.tol, args.max_iter),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_fit(args) -> int:
    header, cols = read_csv_columns(args.input)
    if args.response not in cols:
        raise CliError(f"response column {args.response!r} not found in {args.input}")
    if args.covariates:
        names = [c.strip() for c in args.covariates.split(",") if c.strip()]
    else:
        names = [h for h in header if h not in (args.response, "t")]
    for name in names:
        if name not in cols:
            raise CliError(f"covariate column {name!r} not found in {args.input}")
    y = cols[args.response]
    try:
        dyadic_exponent(y.size)
    except SizingError as exc:
        raise CliError(f"{args.input}: {y.size} data rows; {exc}") from exc
    X = np.column_stack([cols[c] for c in names]) if names else np.zeros((y.size, 0))
    config = build_plm_config(args)
    try:
        fit = fit_plm(y, X, config)
    except (SizingError, RankError, ValueError, np.linalg.LinAlgError) as exc:
        raise CliError(str(exc)) from exc
    doc = fit.to_dict()
    doc["covariates"] = names
    doc["response"] = args.response
    text = json.dumps(doc, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.fitted:
        n = y.size
        t = cols["t"] if "t" in cols else np.arange(1, n + 1) / n
        xb = X @ fit.beta_hat
        write_csv(args.fitted, ["t", "y", "xbeta", "f_hat", "y_hat"], [t, y, xb, fit.f_hat, xb + fit.f_hat])
    if not fit.solver.converged:
        print(f"warning: solver did not converge in {fit.solver.iterations} iterations", file=sys.stderr)
        if args.strict:
            return EXIT_NOCONV
    return EXIT_OK


# -- simulate -------------------------------------------------------------------

def cmd_simulate(args) -> int:
    overrides = {k: v for k, v in dict(n=args.n, replications=args.reps, seed=args.seed,
                                       sigma=args.noise_sd).items() if v is not None}
    try:
        scenario = preset(args.preset, **overrides)
        names = [s.strip() for s in args.estimators.split(",") if s.strip()]
        estimators = make_estimators(names, j0=args.j0, filter=args.filter, max_iter=args.max_iter)
        if args.jobs < 1:
            raise ValueError("--jobs must be at least 1")
        report = run_monte_carlo(scenario, estimators, jobs=args.jobs)
    except (SizingError, ValueError) as exc:
        raise CliError(f"invalid scenario: {exc}") from exc
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.prefix or scenario.name
    (out / f"{stem}.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / f"{stem}.json").write_text(report.to_json(), encoding="utf-8")
    if args.timings:
        Path(args.timings).write_text(report.to_csv(include_timing=True), encoding="utf-8")
    if not args.quiet:
        print(report.format_table())
    return EXIT_OK


# -- transform ---------------------------------------------------------------------

def cmd_transform(args) -> int:
    if args.inverse:
        try:
            with open(args.input, newline="", encoding="utf-8") as fh:
                reader = csv.DictReader(fh)
                rows = list(reader)
                header = reader.fieldnames or []
        except OSError as exc:
            raise CliError(f"cannot read {args.input}: {exc.strerror}") from exc
        for need in ("kind", "level", "position", "value"):
            if need not in header:
                raise CliError(f"coefficient file needs a {need!r} column")
        scaling = [r for r in rows if r["kind"] == "scaling"]
        details = [r for r in rows if r["kind"] == "detail"]
        n = len(rows)
        try:
            J = dyadic_exponent(n)
            j0 = dyadic_exponent(len(scaling))
            blocks = {}
            for r in details:
                blocks.setdefault(int(r["level"]), []).append((int(r["position"]), float(r["value"])))
            det = [np.array([v for _, v in sorted(blocks.get(j, []))]) for j in range(j0, J)]
            sc = np.array([float(r["value"]) for r in sorted(scaling, key=lambda r: int(r["position"]))])
            x = dwt_inverse(WaveletCoeffs(j0, J, sc, det), args.filter)
        except (SizingError, ValueError, KeyError) as exc:
            raise CliError(f"{args.input}: {exc}") from exc
        meta = {"filter": args.filter, "j0": j0, "J": J, "n": n, "inverse": True}
        name = args.column or "x"
        write_csv(args.output, [name], [x])
    else:
        header, cols = read_csv_columns(args.input)
        name = args.column or header[0]
        if name not in cols:
            raise CliError(f"column {name!r} not found in {args.input}")
        try:
            coeffs = dwt_forward(cols[name], args.filter, args.j0)
        except SizingError as exc:
            raise CliError(f"{args.input}: {exc}") from exc
        kinds, levels, positions, values = [], [], [], []
        for k, v in enumerate(coeffs.scaling):
            kinds.append("scaling"), levels.append(coeffs.j0), positions.append(k), values.append(v)
        for j, block in zip(range(coeffs.j0, coeffs.J), coeffs.details):
            for k, v in enumerate(block):
                kinds.append("detail"), levels.append(j), positions.append(k), values.append(v)
        write_csv(args.output, ["kind", "level", "position", "value"], [kinds, levels, positions, values])
        meta = {"filter": args.filter, "j0": coeffs.j0, "J": coeffs.J, "n": coeffs.n,
                "split_index": coeffs.split_index, "column": name, "inverse": False}
    meta["schema_version"] = 1
    meta_path = args.meta or str(Path(args.output).with_suffix(".meta.json"))
    Path(meta_path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


# -- entry point -------------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="wavplm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("fit", help="fit a partially linear model to a CSV file")
    p.add_argument("--config")
    _add(p, "--input", "-i", required=True)
    _add(p, "--response", default="y")
    _add(p, "--covariates", default=None, help="comma-separated names (default: all but response and t)")
    _add(p, "--output", "-o", default=None, help="fit JSON (default: stdout)")
    _add(p, "--fitted", default=None, help="write t, y, x*beta, f_hat, y_hat CSV")
    _add(p, "--strict", action="store_true", help="exit 2 if the solver does not converge")
    _plm_options(p)
    p.set_defaults(func=cmd_fit)
    subs["fit"] = p

    p = sub.add_parser("simulate", help="Monte Carlo study of a preset scenario")
    p.add_argument("--config")
    _add(p, "--preset", default="example1", choices=sorted(PRESETS))
    _add(p, "--reps", type=int, default=None)
    _add(p, "--seed", type=int, default=None)
    _add(p, "--n", type=int, default=None)
    _add(p, "--noise-sd", type=float, default=None)
    _add(p, "--estimators", default=",".join(ESTIMATORS))
    _add(p, "--j0", type=int, default=PRESET_J0)
    _add(p, "--filter", default="sym8", choices=available_filters())
    _add(p, "--max-iter", type=int, default=2000)
    _add(p, "--jobs", type=int, default=1)
    _add(p, "--out-dir", default=".")
    _add(p, "--prefix", default=None, help="output file stem (default: preset name)")
    _add(p, "--timings", default=None, help="also write a per-replication CSV with wall times")
    _add(p, "--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)
    subs["simulate"] = p

    p = sub.add_parser("transform", help="wavelet transform of a CSV column")
    p.add_argument("--config")
    _add(p, "--input", "-i", required=True)
    _add(p, "--output", "-o", required=True)
    _add(p, "--column", default=None)
    _add(p, "--filter", default="sym8", choices=available_filters())
    _add(p, "--j0", type=int, default=DEFAULT_J0)
    _add(p, "--inverse", action="store_true", help="input is a coefficient CSV; reconstruct the signal")
    _add(p, "--meta", default=None, help="metadata JSON path (default: <output>.meta.json)")
    p.set_defaults(func=cmd_transform)
    subs["transform"] = p
    return parser, subs


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    try:
        args = merge_config(args, subs[args.command])
        return args.func(args)
    except CliError as exc:
        print(f"wavplm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
