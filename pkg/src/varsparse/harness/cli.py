"""Command-line entry point: ``varsparse <command> ...``.

Exit codes: 0 when every selected check passes, 1 when a check fails, 2 for
invalid input (bad config, unknown suite, malformed expression, inconsistent
exponent relations).  Every command writes ``<command>.summary.json`` into
``--out-dir`` before exiting, including on exit code 2.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from ..exponent import ExponentError, ExponentFunction
from ..expr import ExpressionError, parse_expression
from ..gphi import GPhiError, LinearLog, Power, PowerLog, luxemburg_norm, weighted_norm
from ..grid import Domain, GridError, sample
from ..sparse import SparseError, SparseFamily, cz_sparse_grid, oscillation_augment, verify_sparse
from ..weights import Constant, WeightError, ap_constant, apq_constant, bump_constant_power, divergent
from .config import ConfigError, ExperimentConfig
from .domination import verify_sparse_domination
from .registry import UnknownSuiteError, resolve
from .report import FAIL, PASS, Report, csv_text, js, merge_reports, plot_sweeps, status, write_report
from .theorems import TheoremError

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID = 0, 1, 2
INPUT_ERRORS = (
    ConfigError,
    UnknownSuiteError,
    TheoremError,
    ExpressionError,
    GridError,
    ExponentError,
    GPhiError,
    SparseError,
    WeightError,
)


class _Fail(Exception):
    """A check that ran to completion and did not hold."""


def _write_summary(out_dir: str, command: str, summary: dict) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{command}.summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return path


def _domain(args) -> Domain:
    return Domain(args.dimension, args.L, args.J)


def _grid(src: str, dom: Domain):
    return sample(parse_expression(src, dom.dimension), dom)


def _short(x: float) -> float:
    """Drop bisection noise below 12 significant digits for display."""
    return float(f"{x:.12g}") if math.isfinite(x) else x


# --------------------------------------------------------------------------- commands


def cmd_norm(args) -> dict:
    dom = _domain(args)
    p = ExponentFunction.from_expression(args.p, dom)
    if args.psi == "power":
        psi = Power(p)
    elif args.psi == "powerlog":
        psi = PowerLog(p, args.q, dom)
    else:
        psi = LinearLog(domain=dom)
    f = _grid(args.f, dom)
    value = weighted_norm(psi, f, _grid(args.weight, dom)) if args.weight else luxemburg_norm(psi, f)
    print(_short(value))
    return {"status": PASS, "norm": value, "psi": args.psi, "J": dom.J}


def cmd_weights(args) -> dict:
    Js = args.sweep or [args.J]
    rows = {"ap": [], "apq": [], "bump": []}
    witness = {}
    for J in Js:
        dom = Domain(args.dimension, args.L, J)
        w = _grid(args.w, dom)
        p = ExponentFunction.from_expression(args.p, dom)
        r = ap_constant(w, p)
        rows["ap"].append(r.value)
        witness["ap"] = r.witness
        if args.q:
            r = apq_constant(w, p, ExponentFunction.from_expression(args.q, dom))
            rows["apq"].append(r.value)
            witness["apq"] = r.witness
        if args.v:
            r = bump_constant_power(w, _grid(args.v, dom), p, args.S, args.R, Constant(1.0), 0)
            rows["bump"].append(r.value)
            witness["bump"] = r.witness
    out = {"J": js(Js), "constants": {}, "status": PASS}
    for name, vals in rows.items():
        if not vals:
            continue
        bounded = all(math.isfinite(v) for v in vals) and not divergent(vals, Js)
        out["constants"][name] = {"values": vals, "witness": witness[name], "bounded": bounded}
        print(f"{name}: {' '.join(repr(v) for v in vals)}  witness {witness[name]}  {'bounded' if bounded else 'divergent'}")
        if not bounded:
            out["status"] = FAIL
    return out


def cmd_sparse(args) -> dict:
    if args.load:
        S = SparseFamily.from_json(Path(args.load).read_text())
    else:
        if not args.f:
            raise ConfigError("sparse needs --f or --load")
        dom = _domain(args)
        shift = tuple(int(c) for c in args.shift) if args.shift else None
        if shift is not None and len(shift) != dom.dimension:
            raise ConfigError(f"--shift needs {dom.dimension} codes")
        S = cz_sparse_grid(abs(_grid(args.f, dom)), shift, args.threshold)
        if args.augment:
            S = oscillation_augment(S, _grid(args.augment, dom))
    rep = verify_sparse(S)
    if args.save:
        Path(args.save).write_text(S.to_json() + "\n")
    print(f"cubes: {len(S)}  min |E(Q)|/|Q|: {rep.min_ratio}  at {rep.witness}  disjoint: {rep.disjoint}")
    return {
        "status": status(rep.sparse),
        "cubes": len(S),
        "min_ratio": str(rep.min_ratio),
        "witness": rep.witness,
        "disjoint": rep.disjoint,
    }


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig.from_dict({"version": 1})
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    return cfg.with_overrides(**changes) if changes else cfg


def _emit(report: Report, out_dir: str, stem: str) -> dict:
    paths = write_report(report, out_dir, stem)
    sys.stdout.write(csv_text(report.rows))
    summary = report.summary()
    summary["csv"] = str(paths["csv"])
    return summary


def cmd_verify(args) -> dict:
    cfg = _config(args)
    suite_id = args.id or cfg.suite
    if not suite_id:
        raise ConfigError("no suite id given on the command line or in the config")
    suite = resolve(suite_id)
    return _emit(suite.func(cfg), args.out_dir, suite.id)


def cmd_dominate(args) -> dict:
    cfg = _config(args)
    ms = args.m if args.m is not None else [int(v) for v in cfg.param("m_values", [0, 1, 2])]
    kind = args.kind or cfg.operator.get("kind", "czo")
    rep = Report(f"domination_{kind}", cfg.seed)
    for m in ms:
        rep.extend(verify_sparse_domination(kind, m, cfg))
    return _emit(rep, args.out_dir, rep.suite)


def cmd_report(args) -> dict:
    rows = merge_reports(args.inputs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "merged.csv").write_text(csv_text(rows))
    svgs = plot_sweeps(rows, out)
    failed = sorted({f"{r.suite}:{r.check}" for r in rows if r.status == FAIL})
    print(f"{len(rows)} rows, {len(svgs)} plots, {len(failed)} failed checks")
    return {
        "status": FAIL if failed else PASS,
        "rows": len(rows),
        "failed_checks": failed,
        "plots": [p.name for p in svgs],
    }


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varsparse", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def domain_args(p, L=0):
        p.add_argument("--dimension", type=int, default=1)
        p.add_argument("--L", type=int, default=L, help="box [-2^L, 2^L)^n; -1 gives the unit box")
        p.add_argument("--J", type=int, default=8, help="cells per axis 2^J")

    def out_arg(p):
        p.add_argument("--out-dir", default="varsparse-out", help="where CSV and summary JSON go")

    p = sub.add_parser("norm", help="Luxemburg norm of a sampled function")
    p.add_argument("--psi", choices=("power", "powerlog", "linearlog"), default="power")
    p.add_argument("--p", default="2", help="exponent expression in x1[, x2]")
    p.add_argument("--q", type=float, default=1.0, help="log power for --psi powerlog")
    p.add_argument("--f", required=True, help="function expression")
    p.add_argument("--weight", help="optional weight expression w, giving ||f w||")
    domain_args(p, L=-1)
    out_arg(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("weights", help="A_p, A_{p,q} and power-bump constants over a J sweep")
    p.add_argument("--w", required=True)
    p.add_argument("--p", default="2")
    p.add_argument("--q", help="target exponent for A_{p,q}")
    p.add_argument("--v", help="second weight for the power-bump constant")
    p.add_argument("--S", type=float, default=2.0)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--sweep", type=int, nargs="+", help="resolutions J (default: --J only)")
    domain_args(p)
    out_arg(p)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("sparse", help="build, verify and serialize a stopping family")
    p.add_argument("--f", help="function whose |f| drives the stopping rule")
    p.add_argument("--shift", nargs="+", help="grid shift codes, one per axis")
    p.add_argument("--threshold", type=float, default=2.0)
    p.add_argument("--augment", metavar="B", help="add the oscillation cubes of symbol B")
    p.add_argument("--save", help="write the family as JSON")
    p.add_argument("--load", help="verify a family read from JSON instead of building one")
    domain_args(p)
    out_arg(p)
    p.set_defaults(func=cmd_sparse)

    for name, func, helptext in (
        ("verify", cmd_verify, "run a lemma, theorem or domination suite"),
        ("dominate", cmd_dominate, "sparse-domination sweep"),
    ):
        p = sub.add_parser(name, help=helptext)
        if name == "verify":
            p.add_argument("id", nargs="?", help="suite id or alias (default: the config's suite)")
        else:
            p.add_argument("--kind", choices=("czo", "fractional"))
            p.add_argument("--m", type=int, nargs="+")
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        out_arg(p)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="merge CSV reports and plot constants against J")
    p.add_argument("--inputs", nargs="+", required=True)
    out_arg(p)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = args.func(args)
        code = EXIT_OK if summary["status"] == PASS else EXIT_CHECK_FAILED
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        summary, code = {"status": "ERROR", "error": str(exc)}, EXIT_INVALID
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        summary, code = {"status": "ERROR", "error": str(exc)}, EXIT_INVALID
    summary["command"] = args.command
    summary["exit_code"] = code
    _write_summary(args.out_dir, args.command, summary)
    return code


if __name__ == "__main__":
    sys.exit(main())
