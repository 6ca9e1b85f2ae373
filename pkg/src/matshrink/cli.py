"""Command-line interface: ``matshrink {estimate,simulate,check,oracle}``.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import sys
import warnings

import numpy as np

from . import conditions as cond
from .conditions import EstimatorConfig, Label, config_checks, default_config
from .errors import (
    CaseError,
    CholeskyFailure,
    DimensionError,
    DomainError,
    IllConditionedWeights,
    NotApplicable,
    ParameterError,
    RankError,
    TieError,
)
from .estimators import GParams, PriorHyper, c_em, k0
from .model import ModelDims, format_matrix, read_matrix, rng_stream, write_matrix
from .posterior import posterior_lambda_mean
from .simulation import ConfigError, apply_config, emit_report, load_grid, run_experiment

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2

VALIDATION_ERRORS = (ParameterError, DimensionError, ConfigError, NotApplicable, CaseError, OSError)
NUMERICAL_ERRORS = (CholeskyFailure, RankError, TieError, DomainError, np.linalg.LinAlgError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    return f"{x:.8g}"


# -- estimate -----------------------------------------------------------------

def _resolve_config(args, dims: ModelDims) -> tuple[EstimatorConfig | None, list[str]]:
    label = Label(args.estimator)
    notes = []
    if label is Label.GB:
        if args.a is not None and args.c is not None:
            hyper = PriorHyper.closed_form(args.a, args.c, dims)
            k = k0(args.a, args.c, dims)
            return EstimatorConfig(label, k, hyper), [f"a = {_fmt(args.a)}", f"b = {_fmt(hyper.b)}",
                                                      f"c = {_fmt(args.c)}", f"k0 = {_fmt(k)}"]
        if args.k0 is not None:
            notes.append(f"k0 = {_fmt(args.k0)}")
            notes.append("covariance not computed: pass --a and --c for the covariance estimator")
            return EstimatorConfig(label, args.k0, None), notes
    elif label in (Label.G1, Label.G2) and args.alpha is not None and args.beta is not None:
        g = GParams(args.alpha, args.beta)
        return EstimatorConfig(label, g, g), [f"alpha = {_fmt(g.alpha)}", f"beta = {_fmt(g.beta)}"]
    elif label is Label.EM:
        return EstimatorConfig(label, c_em(dims), None), [f"c_em = {_fmt(c_em(dims))}"]
    config = default_config(dims, label)
    notes.append("parameters: defaults")
    notes += [f"{k} = {_fmt(v)}" for k, v in config.extras.items()]
    return config, notes


def cmd_estimate(args, out) -> int:
    X = read_matrix(args.x)
    try:
        S = read_matrix(args.s, spd=True)
    except CholeskyFailure as exc:
        # a non-SPD input file is bad input, not a numerical failure
        raise ParameterError(f"{args.s}: {exc}") from exc
    if X.shape[1] != S.shape[0]:
        raise DimensionError(f"X is {X.shape[0]}x{X.shape[1]} but S is {S.shape[0]}x{S.shape[1]}")
    dims = ModelDims(X.shape[0], X.shape[1], args.n)
    config, notes = _resolve_config(args, dims)
    if config.label is Label.GB and config.cov_params is None:
        from .estimators import gb_mean

        mean, cov = gb_mean(X, S, float(config.mean_params)), None
    else:
        mean, cov = apply_config(config, X, S, dims.n)
    out.write(f"# estimator = {config.label.value}\n")
    out.write(f"# case = {dims.case} (m={dims.m}, p={dims.p}, n={dims.n})\n")
    for line in notes:
        out.write(f"# {line}\n")
    if args.out_mean:
        write_matrix(args.out_mean, mean)
        out.write(f"# mean written to {args.out_mean}\n")
    else:
        out.write("# mean\n" + format_matrix(mean))
    if cov is not None:
        if args.out_cov:
            write_matrix(args.out_cov, cov)
            out.write(f"# covariance written to {args.out_cov}\n")
        else:
            out.write("# covariance\n" + format_matrix(cov))
    return EXIT_OK


# -- simulate -----------------------------------------------------------------

def cmd_simulate(args, out) -> int:
    grid = load_grid(args.config)
    if args.seed is not None or args.reps is not None:
        from dataclasses import replace

        grid = replace(
            grid,
            base_seed=grid.base_seed if args.seed is None else args.seed,
            replications=grid.replications if args.reps is None else args.reps,
        )
    reports = run_experiment(grid, jobs=args.jobs)
    csv_path, manifest = emit_report(reports, args.out, grid)
    failed = sum(r.error is not None for r in reports)
    out.write(f"wrote {csv_path} ({len(reports)} rows, {failed} failed cells) and {manifest}\n")
    return EXIT_OK


# -- check --------------------------------------------------------------------

def cmd_check(args, out) -> int:
    dims = ModelDims(args.m, args.p, args.n)
    out.write(f"# dims: p={dims.p} n={dims.n} m={dims.m} ({dims.case})\n")
    label = Label(args.defaults or args.label or ("GB" if args.a is not None or args.k0 is not None else "G1"))
    if args.defaults:
        config = default_config(dims, label)
        for k, v in config.extras.items():
            out.write(f"{k} = {v:.6f}\n")
    elif label is Label.GB:
        if args.a is not None and args.c is not None:
            hyper = PriorHyper.closed_form(args.a, args.c, dims)
            config = EstimatorConfig(label, k0(args.a, args.c, dims), hyper)
        elif args.k0 is not None:
            config = EstimatorConfig(label, args.k0, None)
        else:
            raise ParameterError("GB check needs --a and --c, or --k0, or --defaults GB")
        out.write(f"k0 = {float(config.mean_params):.6f}\n")
    else:
        if args.alpha is None or args.beta is None:
            raise ParameterError("check needs --alpha and --beta (or --defaults LABEL)")
        g = GParams(args.alpha, args.beta)
        config = EstimatorConfig(label, g, g)

    rows = config_checks(dims, config)
    if config.label is Label.GB and isinstance(config.cov_params, PriorHyper):
        rows += _gb_rows(dims, config.cov_params)
    if args.only:
        rows = [r for r in rows if args.only.lower() in r.name.lower()]
    width = max([len(r.name) for r in rows] + [10])
    out.write(f"{'condition':<{width}}  {'value':>12}  {'bound':>12}  verdict\n")
    for r in rows:
        if r.note.startswith("not applicable"):
            verdict = "NOT APPLICABLE"
        else:
            verdict = "PASS" if r.passed else "FAIL"
        out.write(f"{r.name:<{width}}  {r.value:>12.6f}  {r.bound:>12.6f}  {verdict}\n")
        if r.note and not r.note.startswith("not applicable"):
            out.write(f"    note: {r.note}\n")
        elif r.note:
            out.write(f"    {r.note}\n")
    return EXIT_OK


def _gb_rows(dims, hyper):
    rows = []
    k = k0(hyper.a, hyper.c, dims)
    for name, bound_fn, check_fn in (
        ("GB mean/matrix-loss k0", cond.gb_matrix_mean_bound, cond.check_gb_matrix_mean),
        ("GB mean/scalar-loss k0", cond.gb_scalar_mean_bound, cond.check_gb_scalar_mean),
    ):
        try:
            note = ""
            if "scalar" in name:
                note = ("bound 2(|p-m|-1)/(n-p+2ell+2|p-m|-1) is the alpha/beta scalar-loss "
                        "bound at alpha = k0, beta = 1 - k0")
            rows.append(cond.Verdict(name, k, bound_fn(dims), check_fn(dims, hyper), note))
        except NotApplicable as exc:
            rows.append(cond.Verdict(name, k, float("nan"), False, f"not applicable: {exc}"))
    if dims.p > dims.m + 1:
        lo = cond.c_low(dims)
        ok = lo <= hyper.c + cond.SLACK * max(1.0, abs(lo)) and -2 < hyper.c < dims.n - 2 * dims.m
        rows.append(cond.Verdict("GB KL c >= c_low", hyper.c, lo, ok,
                                 f"c_low exists: {cond.c_low_exists(dims)}"))
    elif dims.m >= dims.p:
        hi = cond.a_upp(dims)
        ok = cond.a_low(dims) < hyper.a <= hi + cond.SLACK * max(1.0, abs(hi))
        rows.append(cond.Verdict("GB KL a <= a_upp", hyper.a, hi, ok,
                                 f"a_low = {cond.a_low(dims):g}; a_upp exists: {cond.a_upp_exists(dims)}"))
    return rows


# -- oracle -------------------------------------------------------------------

def cmd_oracle(args, out) -> int:
    try:
        F = np.array([float(v) for v in args.F.split(",")])
    except ValueError as exc:
        raise ParameterError(f"--F must be a comma-separated list of numbers: {exc}") from exc
    dims = ModelDims(args.m, args.p, args.n)
    hyper = PriorHyper(args.a, args.b, args.c)
    buf = io.StringIO()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IllConditionedWeights)
        est = posterior_lambda_mean(F, hyper, dims, args.samples, rng_stream(args.seed))
    for w in caught:
        if issubclass(w.category, IllConditionedWeights):
            sys.stderr.write(f"WARNING: {w.message}\n")
            buf.write(f"# warning: {w.message}\n")
    kk = k0(hyper.a, hyper.c, dims)
    buf.write(f"# samples = {args.samples}, seed = {args.seed}\n")
    buf.write(f"# closed_form_b = {hyper.is_closed_form(dims)} (k0 = {kk!r})\n")
    buf.write(f"# ess = {est.ess!r}\n")
    buf.write("# lambda_mean\n" + format_matrix(est.lambda_mean))
    buf.write("# se\n" + format_matrix(est.se))
    off = ~np.eye(dims.ell, dtype=bool)
    if off.any():
        z = np.max(np.abs(est.lambda_mean[off]) / est.se[off])
        buf.write(f"# diagonality: max |offdiag| / se = {z:.3f} ({'ok' if z < 3 else 'SUSPECT'})\n")
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


# -- wiring -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="matshrink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="apply an estimator to CSV matrices")
    p.add_argument("--x", required=True, help="CSV file with the m x p matrix X")
    p.add_argument("--s", required=True, help="CSV file with the p x p matrix S")
    p.add_argument("--n", required=True, type=int, help="Wishart degrees of freedom")
    p.add_argument("--estimator", default="GB", choices=[l.value for l in Label])
    p.add_argument("--k0", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--out-mean")
    p.add_argument("--out-cov")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run a PRIR experiment grid from a YAML config")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="CSV report path; manifest written alongside")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--reps", type=int, help="override the config replication count")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="evaluate dominance conditions")
    for name in ("p", "n", "m"):
        p.add_argument(f"--{name}", required=True, type=int)
    p.add_argument("--defaults", choices=["GB", "G1", "G2", "EM"])
    p.add_argument("--label", choices=["GB", "G1", "G2"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--k0", type=float)
    p.add_argument("--only", help="show only conditions whose name contains this text")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("oracle", help="Monte Carlo estimate of E[Lambda | F]")
    p.add_argument("--F", required=True, help="comma-separated eigenvalues")
    p.add_argument("--a", required=True, type=float)
    p.add_argument("--b", required=True, type=float)
    p.add_argument("--c", required=True, type=float)
    for name in ("m", "p", "n"):
        p.add_argument(f"--{name}", required=True, type=int)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args, out)
    except VALIDATION_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())


def main_entry() -> None:
    sys.exit(main())
