"""Command line interface: ``fcar <command> [options]``.

Commands
--------
simulate       write a simulated series (CSV) and its kernel descriptor
select         fit a model, write it as JSON and print a selection report
forecast       forecast from a saved model and a data file
benchmark      compare methods over moving windows
kernel-approx  Brownian-RKHS approximation distances for a kernel

Exit status is 0 on success, 2 for usage errors, 3 for bad input data or
arguments and 4 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import FunctionalSeries, make_uniform_grid
from .evaluation import METHODS, benchmark, make_windows
from .exceptions import DataError, FCARError, InvalidArgumentError, NumericalError, UnsupportedError
from .forecast import fit, forecast, load_model, parse_p_rule, save_model
from .io import kernel_path, read_kernel, read_series, write_kernel, write_matrix, write_series
from .rkhs import KERNELS, distance_profile
from .selection import DEFAULT_P_MAX, estimate_p_cv, estimate_p_kmeans
from .simulate import FAMILIES, FARParameters, SimConfig, TrueKernel, operator_norm_rho, simulate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(p, seed=False):
    p.add_argument("--config", metavar="FILE", help="flat key = value file of option defaults")
    p.add_argument("--threads", type=int, default=1, help="worker threads (0 = all cores)")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _add_fit_options(p, rule=True):
    p.add_argument("--q", type=int, default=1, help="model order")
    p.add_argument("--p-max", type=int, default=DEFAULT_P_MAX, help="greedy path length")
    p.add_argument("--delta", type=float, default=None, help="minimum same-lag spacing (default grid step)")
    p.add_argument("--folds", type=int, default=5, help="rolling folds for the cv rule")
    if rule:
        p.add_argument("--p-rule", default="kmeans", help="kmeans, cv or fixed:<p>")
        p.add_argument("--center", action=argparse.BooleanOptionalAction, default=True, help="center curves first")
    p.add_argument("--header", choices=("auto", "yes", "no"), default="auto", help="grid row in the CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fcar", description="Point-selection forecasting of functional time series.")
    parser.add_argument("--version", action="version", version=f"fcar {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="simulate a series")
    _add_common(p, seed=True)
    p.add_argument("--family", choices=FAMILIES, help="required")
    p.add_argument("--m", type=int, help="number of curves (required)")
    p.add_argument("--grid", type=int, default=101, help="uniform grid size")
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--theta", type=float, default=1.0, help="O.U. mean reversion")
    p.add_argument("--D", type=int, default=15, help="FAR basis size")
    p.add_argument("--kappa", type=float, default=0.8, help="FAR spectral radius")
    p.add_argument("--out", help="output CSV (required)")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("select", help="select points and fit a model")
    _add_common(p)
    p.add_argument("input", help="data CSV")
    _add_fit_options(p)
    p.add_argument("--model-out", help="model JSON path")
    p.add_argument("--report", help="also write the report to this file")
    p.set_defaults(handler=cmd_select)

    p = sub.add_parser("forecast", help="forecast from a saved model")
    _add_common(p)
    p.add_argument("model", help="model JSON")
    p.add_argument("input", help="data CSV, oldest curve first")
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(handler=cmd_forecast)

    p = sub.add_parser("benchmark", help="compare forecasting methods")
    _add_common(p, seed=True)
    p.add_argument("input", nargs="?", help="data CSV (or use --family)")
    p.add_argument("--family", choices=FAMILIES, help="simulate replications instead of reading a file")
    p.add_argument("--m", type=int, default=115, help="curves per simulated replication")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--methods", default="rkhs-kmeans,naive", help="comma list of " + ", ".join(METHODS))
    p.add_argument("--blocks", type=int, default=1)
    p.add_argument("--train", type=int, default=100)
    p.add_argument("--test", type=int, default=15)
    p.add_argument("--reps", type=int, default=1)
    _add_fit_options(p, rule=False)
    p.add_argument("--out", help="error report CSV")
    p.add_argument("--timing-out", help="timing CSV")
    p.add_argument("--json", dest="json_out", help="full report as JSON")
    p.set_defaults(handler=cmd_benchmark)

    p = sub.add_parser("kernel-approx", help="RKHS distance profile of a kernel")
    _add_common(p)
    p.add_argument("kernel", help="one of " + ", ".join(KERNELS))
    p.add_argument("--p-max", type=int, default=20)
    p.add_argument("--design", choices=("greedy", "quantile"), default="greedy")
    p.add_argument("--s-points", type=int, default=101)
    p.add_argument("--out", help="distance matrix CSV (default stdout)")
    p.set_defaults(handler=cmd_kernel_approx)
    return parser


# ---------------------------------------------------------------- config


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(subparser: argparse.ArgumentParser, cfg: dict, path) -> None:
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config", "handler")}
    defaults = {}
    for key, raw in cfg.items():
        action = actions.get(key)
        if action is None or not action.option_strings:
            raise UsageError(f"{path}: unknown option {key!r} for {subparser.prog}")
        if isinstance(action, argparse.BooleanOptionalAction):
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise UsageError(f"{path}: {key} expects true or false")
            defaults[key] = low in _TRUE
        else:
            try:
                value = action.type(raw) if action.type else raw
            except (TypeError, ValueError):
                raise UsageError(f"{path}: bad value {raw!r} for {key}") from None
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"{path}: {key} must be one of {', '.join(map(str, action.choices))}")
            defaults[key] = value
    subparser.set_defaults(**defaults)


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]
        _apply_config(sub, read_config(args.config), args.config)
        args = parser.parse_args(argv)
    return args


# -------------------------------------------------------------- commands


def _emit(text: str, path=None) -> None:
    print(text, end="" if text.endswith("\n") else "\n")
    if path:
        Path(path).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _kernel_descriptor(truth, config: SimConfig) -> dict:
    if isinstance(truth, TrueKernel):
        doc = truth.to_dict()
        norms = [operator_norm_rho(truth.alpha, truth.points, j) for j in range(1, 6)]
        doc["operator_norms"] = norms
    else:
        assert isinstance(truth, FARParameters)
        doc = {
            "family": "far",
            "psi": truth.psi.tolist(),
            "noise_variances": truth.noise_variances.tolist(),
            "params": {"D": config.D, "kappa": config.operator_scale},
        }
    doc["seed"] = config.seed
    doc["m"] = config.m
    doc["burn_in"] = config.burn_in
    return doc


def _require(args, *names) -> None:
    missing = ["--" + n.replace("_", "-") for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")


def cmd_simulate(args) -> int:
    _require(args, "family", "m", "out")
    config = SimConfig(
        args.family,
        args.m,
        make_uniform_grid(args.grid),
        burn_in=args.burn_in,
        seed=args.seed,
        theta=args.theta,
        D=args.D,
        operator_scale=args.kappa,
    )
    series, truth = simulate(config)
    write_series(args.out, series)
    kpath = kernel_path(args.out)
    doc = _kernel_descriptor(truth, config)
    write_kernel(kpath, doc)
    lines = [f"wrote {series.m} curves on {series.n_points} grid points to {args.out}", f"kernel: {kpath}"]
    if "points" in doc:
        pts = ", ".join(f"(lag {c['lag']}, t={c['abscissa']:g})" for c in doc["points"])
        lines.append(f"true points: {pts}")
        lines.append("operator norms ||rho^j||, j=1..5: " + " ".join(f"{v:.5g}" for v in doc["operator_norms"]))
    _emit("\n".join(lines))
    return EXIT_OK


def _selection_report(series: FunctionalSeries, model, args) -> str:
    trace = model.trace
    lines = [
        f"data: {series.m} curves, {series.n_points} grid points",
        f"q = {model.q}, p_max = {model.provenance['p_max']}, delta = {trace.delta:.6g}",
        f"stop: {trace.stop_reason}",
        "",
        " step  lag  abscissa        gain    log-gain   criterion  skipped",
    ]
    crit = trace.criterion
    for i, (c, g) in enumerate(zip(trace.chosen, trace.gains)):
        lines.append(
            f"{i + 1:5d} {c.lag:4d}  {c.abscissa:8.4f}  {g:10.4e}  {np.log(g):10.4f}  {crit[i]:10.4e}  {trace.skipped[i]:7d}"
        )
    lines.append(f"skipped candidates (total): {sum(trace.skipped)}")
    lines.append("")
    lines.append(f"p_hat (kmeans): {estimate_p_kmeans(trace)}")
    try:
        p_cv = estimate_p_cv(series, model.q, len(trace), args.folds, args.delta)
        lines.append(f"p_hat (cv, {args.folds} folds): {p_cv}")
    except InvalidArgumentError as exc:
        lines.append(f"p_hat (cv): n/a ({exc})")
    lines.append(f"rule {model.p_rule}: keeping {model.p_hat} point(s)")
    for c in model.points:
        lines.append(f"  lag {c.lag}, t = {c.abscissa:.6g}")
    return "\n".join(lines) + "\n"


def cmd_select(args) -> int:
    parse_p_rule(args.p_rule)
    series = read_series(args.input, args.header)
    model = fit(series, args.q, args.p_rule, args.p_max, args.delta, args.folds, center_data=args.center)
    if args.model_out:
        save_model(model, args.model_out)
    _emit(_selection_report(series, model, args), args.report)
    return EXIT_OK


def cmd_forecast(args) -> int:
    model = load_model(args.model)
    series = read_series(args.input, args.header)
    if len(series.grid) != len(model.grid) or not np.allclose(series.grid.points, model.grid.points, atol=1e-12):
        raise DataError(f"{args.input}: grid does not match the model grid ({len(model.grid)} points)")
    preds = forecast(model, series.values, args.steps)
    if args.out:
        write_matrix(args.out, preds, model.grid.points)
        print(f"wrote {len(preds)} forecast curve(s) to {args.out}")
    else:
        write_matrix(sys.stdout, preds, model.grid.points)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if (args.input is None) == (args.family is None):
        raise UsageError("benchmark needs exactly one of an input file or --family")
    kernel = None
    if args.family:
        source = SimConfig(args.family, args.m, make_uniform_grid(args.grid), seed=args.seed, theta=args.theta)
        m = args.m
    else:
        source = read_series(args.input, args.header)
        m = source.m
        kpath = kernel_path(args.input)
        if "exact" in methods:
            if not kpath.exists():
                raise UnsupportedError(f"exact method needs the kernel descriptor {kpath}")
            doc = read_kernel(kpath)
            if "points" not in doc:
                raise UnsupportedError(f"the {doc.get('family')} descriptor has no point-evaluation operator")
            kernel = TrueKernel.from_dict(doc)
    scheme = make_windows(m, args.blocks, args.train, args.test)
    report = benchmark(
        source,
        methods,
        scheme,
        args.q,
        args.p_max,
        args.reps,
        kernel,
        args.delta,
        args.folds,
        args.threads,
    )
    csv_text = report.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
    if args.timing_out:
        Path(args.timing_out).write_text(report.timing_csv(), encoding="utf-8")
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8")
    _emit(f"{report.n_windows} window(s)\n" + csv_text + report.timing_csv())
    return EXIT_OK


def cmd_kernel_approx(args) -> int:
    if args.kernel not in KERNELS:
        raise UsageError(f"unknown kernel {args.kernel!r}; choose from {', '.join(KERNELS)}")
    prof = distance_profile(args.kernel, args.p_max, args.design, s_points=args.s_points)
    header = ["s"] + [f"p{p}" for p in range(1, args.p_max + 1)]
    mat = np.column_stack([prof.s, prof.distances])
    if args.out:
        write_matrix(args.out, mat, header)
        sup = prof.distances.max(axis=0)
        print(f"wrote {mat.shape[0]}x{args.p_max} distances ({args.design} design) to {args.out}")
        print("sup distance by p: " + " ".join(f"{v:.3g}" for v in sup))
    else:
        write_matrix(sys.stdout, mat, header)
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, InvalidArgumentError, UnsupportedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FCARError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
