"""Command-line front end.

    scaled-mtp reject INPUT --sev --scaling power:0.5 --alpha 0.05
    scaled-mtp thresholds --stp --beta 0.2 --m 10
    scaled-mtp verify --seed 1 --m0 200 --m1 0 --scaling linear
    scaled-mtp optimize --seed 1 --parameter gamma --m0 990 --m1 10
    scaled-mtp twotest --lambda 6.8 --delta 1.9596

Exit codes: 0 ok, 2 malformed input, 3 invalid parameters, 4 a control
check failed (verify only).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .procedures import (
    SevProcedureConfig,
    StpProcedureConfig,
    run_sev_procedure,
    run_stp_procedure,
    sev_thresholds,
    stp_thresholds,
    weighted_transform,
)
from .simulation import (
    GainStudyConfig,
    GaussianShiftModel,
    TwoTestModel,
    curve_from_surface,
    default_workers,
    gain_surface,
    minimizing_effect,
    price_for_cv,
    two_test_gain,
    two_test_grid_optimum,
    two_test_optimal_cv,
    verify_control,
)
from .types import (
    HarmonicLinear,
    Identity,
    PValueSet,
    TabulatedShape,
    WeightVector,
    parse_scaling,
)

EXIT_INPUT = 2
EXIT_PARAMS = 3
EXIT_CHECK = 4

DEFAULT_GAMMAS = tuple(round(0.05 * i, 2) for i in range(21))
DEFAULT_TAUS = (1, 2, 5, 10, 20, 50, 100, 500, 1000)
DEFAULT_LAMBDAS = tuple(float(x) for x in range(1, 31))


class InputError(Exception):
    pass


class ParamError(Exception):
    pass


def fmt(x) -> str:
    """Shortest round-trip text for floats, plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ---------------------------------------------------------------------------
# input
# ---------------------------------------------------------------------------


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_pvalues(text: str) -> tuple[PValueSet, WeightVector | None]:
    """Parse one p-value per line, or ``id,p[,weight]`` rows.

    A first line whose p-value column is not numeric is taken as a header.
    """
    rows = []
    first = True
    ncols = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        toks = [t.strip() for t in line.split(",")]
        if first:
            first = False
            ptok = toks[0] if len(toks) == 1 else toks[1]
            if not _is_number(ptok):
                ncols = len(toks)
                continue
        if ncols is None:
            ncols = len(toks)
        if len(toks) != ncols or ncols not in (1, 2, 3):
            raise InputError(f"line {lineno}: expected {ncols} column(s), got {len(toks)}")
        if ncols == 1:
            ident, ptxt, wtxt = str(len(rows) + 1), toks[0], None
        else:
            ident, ptxt = toks[0], toks[1]
            wtxt = toks[2] if ncols == 3 else None
        try:
            p = float(ptxt)
        except ValueError:
            raise InputError(f"line {lineno}: not a number: {ptxt!r}") from None
        if not 0.0 <= p <= 1.0:
            raise InputError(f"line {lineno}: p-value {p} outside [0, 1]")
        w = None
        if wtxt is not None:
            try:
                w = float(wtxt)
            except ValueError:
                raise InputError(f"line {lineno}: not a number: {wtxt!r}") from None
            if not (w > 0 and np.isfinite(w)):
                raise InputError(f"line {lineno}: weight must be positive")
        rows.append((lineno, ident, p, w))
    if not rows:
        raise InputError("no p-values found")
    seen = {}
    for lineno, ident, _, _ in rows:
        if ident in seen:
            raise InputError(f"line {lineno}: duplicate id {ident!r} (first on line {seen[ident]})")
        seen[ident] = lineno
    pvals = PValueSet(tuple(r[1] for r in rows), [r[2] for r in rows])
    weights = None
    if ncols == 3:
        weights = WeightVector([r[3] for r in rows])
    return pvals, weights


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _csv_text(header, rows, comments=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    for c in comments:
        buf.write(f"# {c}\n")
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def _emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _format(args) -> str:
    if args.format:
        return args.format
    if args.output and str(args.output).endswith(".json"):
        return "json"
    return "csv"


# ---------------------------------------------------------------------------
# procedure flags
# ---------------------------------------------------------------------------


def _add_procedure_flags(p: argparse.ArgumentParser, many_scalings: bool = False) -> None:
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--sev", dest="kind", action="store_const", const="sev",
                      help="scaled expected value control (step-up, default)")
    kind.add_argument("--stp", dest="kind", action="store_const", const="stp",
                      help="scaled tail probability control (step-down)")
    p.set_defaults(kind="sev")
    if many_scalings:
        p.add_argument("--scaling", action="append", default=None,
                       help="scaling descriptor; repeat for several scenarios")
    else:
        p.add_argument("--scaling", default="linear",
                       help="linear | constant:C | truncated:TAU | power:GAMMA | tabulated:v1,v2,...")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--beta", type=float, default=None, help="STP exceedance level")
    p.add_argument("--shape", choices=["identity", "harmonic", "inverse"], default=None)
    p.add_argument("--dependence", choices=["simes", "arbitrary"], default="simes")
    p.add_argument("--correction", choices=["conservative", "strict"], default="conservative",
                   help="upper summation limit of the arbitrary-dependence constant")
    p.add_argument("--mode", choices=["step_up", "step_down"], default="step_up")


def _shape(name, dependence, scaling, m):
    if name is None:
        name = "harmonic" if dependence == "arbitrary" else "identity"
    if name == "identity":
        return Identity()
    if name == "harmonic":
        return HarmonicLinear()
    return TabulatedShape.inverse_of(scaling, m)


def _build_config(args, m: int, scaling_text: str, weights=None):
    try:
        scaling = parse_scaling(scaling_text)
        scaling.check(m)
        if args.kind == "stp":
            if weights is not None:
                raise ParamError("weights are only supported for --sev procedures")
            if args.shape is not None:
                raise ParamError("--shape applies to --sev procedures only")
            if args.mode != "step_up":
                raise ParamError("--stp procedures are always step-down")
            return StpProcedureConfig(
                args.alpha, args.beta if args.beta is not None else 0.0, scaling,
                args.dependence, args.correction,
            )
        if args.beta is not None:
            raise ParamError("--beta applies to --stp procedures only")
        shape = _shape(args.shape, args.dependence, scaling, m)
        return SevProcedureConfig(args.alpha, scaling, shape, weights, args.mode)
    except ParamError:
        raise
    except ValueError as exc:
        raise ParamError(str(exc)) from None


def _config_dict(cfg) -> dict:
    if isinstance(cfg, StpProcedureConfig):
        return {
            "procedure": "stp",
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "scaling": cfg.scaling.describe(),
            "dependence": cfg.dependence,
            "correction": cfg.correction_upper,
        }
    return {
        "procedure": "sev",
        "alpha": cfg.alpha,
        "scaling": cfg.scaling.describe(),
        "shape": cfg.shape.describe(),
        "weighted": cfg.weights is not None,
        "mode": cfg.mode,
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_reject(args) -> int:
    try:
        text = Path(args.input).read_text() if args.input != "-" else sys.stdin.read()
    except OSError as exc:
        raise InputError(str(exc)) from None
    pvals, weights = read_pvalues(text)
    cfg = _build_config(args, pvals.m, args.scaling, weights)
    if isinstance(cfg, StpProcedureConfig):
        outcome = run_stp_procedure(pvals, cfg)
        ranked = pvals
        t = stp_thresholds(cfg, pvals.m)
    else:
        outcome = run_sev_procedure(pvals, cfg)
        ranked = weighted_transform(pvals, weights) if weights is not None else pvals
        t = sev_thresholds(cfg, pvals.m)
    ranks = ranked.ranks()
    rows = []
    for j, ident in enumerate(pvals.ids):
        row = [ident, float(pvals.p[j])]
        if weights is not None:
            row.append(float(weights.weights[j]))
        row += [int(ranks[j]), float(t.values[ranks[j] - 1]), int(ident in outcome.rejected_ids)]
        rows.append(row)
    header = ["id", "p"] + (["weight"] if weights is not None else []) + ["rank", "threshold", "rejected"]
    summary = {"U": outcome.U, "R": outcome.R, "m": pvals.m, **_config_dict(cfg)}
    for w in t.meta.get("warnings", []):
        print(f"warning: {w}", file=sys.stderr)
    if _format(args) == "json":
        _emit(args, _json_text({"summary": summary, "warnings": t.meta.get("warnings", []),
                                "rows": [dict(zip(header, r)) for r in rows]}))
    else:
        _emit(args, _csv_text(header, rows, [f"{k}={fmt(v)}" for k, v in summary.items()]))
    return 0


def cmd_thresholds(args) -> int:
    if args.m is None or args.m < 1:
        raise ParamError("--m must be a positive integer")
    cfg = _build_config(args, args.m, args.scaling)
    if isinstance(cfg, StpProcedureConfig):
        t = stp_thresholds(cfg, args.m)
        base = t.meta.get("uncorrected")
        corrected = t.values if base is not None else None
        base = t.values if base is None else base
    else:
        t = sev_thresholds(cfg, args.m)
        if args.dependence == "arbitrary":
            plain = SevProcedureConfig(cfg.alpha, cfg.scaling, Identity(), None, cfg.mode)
            base, corrected = sev_thresholds(plain, args.m).values, t.values
        else:
            base, corrected = t.values, None
    header = ["i", "t_i"] + (["t_prime_i"] if corrected is not None else [])
    rows = []
    for i in range(args.m):
        row = [i + 1, float(base[i])]
        if corrected is not None:
            row.append(float(corrected[i]))
        rows.append(row)
    info = {"m": args.m, **_config_dict(cfg)}
    if "correction" in t.meta:
        info["correction"] = t.meta["correction"]
        info["correction_range"] = list(t.meta["correction_range"])
    for w in t.meta.get("warnings", []):
        print(f"warning: {w}", file=sys.stderr)
    if _format(args) == "json":
        _emit(args, _json_text({"config": info, "warnings": t.meta.get("warnings", []),
                                "rows": [dict(zip(header, r)) for r in rows]}))
    else:
        _emit(args, _csv_text(header, rows, [f"{k}={fmt(v)}" for k, v in info.items()]))
    return 0


def _model(args) -> GaussianShiftModel:
    try:
        return GaussianShiftModel(args.m0, args.m1, args.delta, args.rho)
    except ValueError as exc:
        raise ParamError(str(exc)) from None


def _workers(args) -> int:
    if args.workers is not None:
        if args.workers < 1:
            raise ParamError("--workers must be >= 1")
        return args.workers
    return default_workers()


def _require_seed(args) -> None:
    if args.seed is None:
        raise ParamError("--seed is required for stochastic commands")
    if args.n_reps < 1:
        raise ParamError("--n-reps must be >= 1")


def cmd_verify(args) -> int:
    _require_seed(args)
    model = _model(args)
    workers = _workers(args)
    scalings = args.scaling or ["linear"]
    cfgs = [_build_config(args, model.m, s) for s in scalings]
    header = ["scenario", "scaling", "check", "estimate", "std_error", "bound", "passed"]
    rows, scenarios = [], []
    ok = True
    for idx, cfg in enumerate(cfgs):
        res = verify_control(model, cfg, args.n_reps, args.seed, workers=workers, k=args.k, lam=args.lam)
        ok &= res.passed
        for c in res.checks:
            rows.append([idx, cfg.scaling.describe(), c.name, c.estimate, c.std_error, c.bound, c.passed])
        scenarios.append({"config": _config_dict(cfg), "bound": res.bound, "passed": res.passed,
                          "checks": [c.__dict__ for c in res.checks], "report": res.report.to_dict()})
    provenance = {"command": "verify", "seed": args.seed, "n_reps": args.n_reps,
                  "model": model.describe(), "tolerance_se": 3.0}
    if _format(args) == "json":
        _emit(args, _json_text({"config": provenance, "passed": ok, "scenarios": scenarios}))
    else:
        _emit(args, _csv_text(header, rows, [f"{k}={json.dumps(v)}" for k, v in provenance.items()]))
    return 0 if ok else EXIT_CHECK


def _grid(text, default, cast=float):
    if text is None:
        return tuple(cast(v) for v in default)
    try:
        return tuple(cast(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ParamError(f"bad grid {text!r}") from None


def cmd_optimize(args) -> int:
    _require_seed(args)
    model = _model(args)
    workers = _workers(args)
    default = DEFAULT_GAMMAS if args.parameter == "gamma" else [t for t in DEFAULT_TAUS if t <= model.m]
    values = _grid(args.values, default)
    lambdas = _grid(args.lambdas, DEFAULT_LAMBDAS)
    try:
        study = GainStudyConfig(lambdas, values, args.parameter, args.alpha, args.n_reps, args.seed)
        procs = study.procedures()
        for cfg in procs:
            cfg.scaling.check(model.m)
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    mean, se = gain_surface(study, model, workers)
    curve = curve_from_surface(study, mean, se)
    header = ["lambda", args.parameter, "gain", "std_error", "is_argmax"]
    rows = []
    for i, lam in enumerate(study.lambdas):
        for j, v in enumerate(study.values):
            rows.append([lam, v, float(mean[i, j]), float(se[i, j]), curve[i].best == v])
    provenance = {"command": "optimize", "seed": args.seed, "n_reps": args.n_reps, "alpha": args.alpha,
                  "parameter": args.parameter, "model": model.describe()}
    if _format(args) == "json":
        _emit(args, _json_text({
            "config": {**provenance, "lambdas": study.lambdas, "values": study.values},
            "curve": [c.__dict__ for c in curve],
            "cells": [dict(zip(header, r)) for r in rows],
        }))
    else:
        _emit(args, _csv_text(header, rows, [f"{k}={json.dumps(v)}" for k, v in provenance.items()]))
    return 0


def cmd_twotest(args) -> int:
    try:
        model = TwoTestModel(args.delta, args.lam)
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    if args.lam < 1:
        raise ParamError("--lambda must be >= 1")
    cv = two_test_optimal_cv(model)
    grid_cv = two_test_grid_optimum(model, step=args.step)
    out = {
        "lambda": args.lam,
        "delta": args.delta,
        "cv_opt": cv,
        "cv_grid": grid_cv,
        "gain_opt": two_test_gain(model, cv),
        "min_cv_effect": minimizing_effect(args.lam),
        "price_at_cv_opt": price_for_cv(cv),
    }
    if _format(args) == "json":
        _emit(args, _json_text(out))
    else:
        _emit(args, _csv_text(list(out), [list(out.values())]))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_io(p):
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], default=None)


def _add_sim(p):
    p.add_argument("--seed", type=int, default=None, help="master seed (required)")
    p.add_argument("--n-reps", type=int, default=1000)
    p.add_argument("--m0", type=int, required=True)
    p.add_argument("--m1", type=int, default=0)
    p.add_argument("--delta", type=float, default=3.0)
    p.add_argument("--rho", type=float, default=None, help="equicorrelation; omit for independence")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $SCALED_MTP_WORKERS or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scaled-mtp", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reject", help="run a procedure on a p-value file")
    p.add_argument("input", help="p-value file ('-' for stdin)")
    _add_procedure_flags(p)
    _add_io(p)
    p.set_defaults(func=cmd_reject)

    p = sub.add_parser("thresholds", help="print a threshold sequence")
    p.add_argument("--m", type=int, required=True)
    _add_procedure_flags(p)
    _add_io(p)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("verify", help="Monte-Carlo check of error-rate control")
    _add_procedure_flags(p, many_scalings=True)
    _add_sim(p)
    p.add_argument("--k", type=int, default=1, help="k for the k-FWER estimate")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    _add_io(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("optimize", help="gain-optimal gamma or tau per penalty")
    p.add_argument("--parameter", choices=["gamma", "tau"], default="gamma")
    p.add_argument("--values", help="comma-separated parameter grid")
    p.add_argument("--lambdas", help="comma-separated penalty grid")
    p.add_argument("--alpha", type=float, default=0.05)
    _add_sim(p)
    _add_io(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("twotest", help="closed-form two-test model")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--step", type=float, default=1e-3)
    _add_io(p)
    p.set_defaults(func=cmd_twotest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ParamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
