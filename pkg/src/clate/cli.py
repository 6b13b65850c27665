"""Command-line entry point: ``clate {audit,represent,ordered,simulate,check-model}``.

Exit codes: 0 when every check passes, 1 when at least one fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ._version import __version__
from .data import ingest_csv
from .diagnostics import audit
from .exceptions import ClateError, IngestionError, ModelValidationError, MonotonicityError, AmbiguousIndexError
from .model import check_conditional_independence, classify_monotonicity
from .ordered import construct_ordered_representation, verify_ordered
from .report import canonical_json
from .representation import DEFAULT_MIN_CELL, DEFAULT_TOL, construct_representation, normalize_uniform
from .serialization import (
    load_model,
    model_to_json,
    representation_to_dict,
    threshold_rep_to_dict,
)
from .simulate import RNG_ALGORITHM, DgpSpec, generate_model, sample

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

log = logging.getLogger("clate")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_audit(args) -> int:
    path = Path(args.input)
    if path.suffix.lower() == ".csv":
        bins = [float(b) for b in args.bins.split(",")] if args.bins else None
        obj = ingest_csv(path, args.x_col, args.z_col, args.d_col, args.y_col, bins=bins)
    else:
        obj = load_model(path)
    report = audit(obj, anchor=args.anchor, tol=args.tol, min_cell=args.min_cell)
    _emit(report.to_json(), args.out)
    return EXIT_PASS if report.verdict == "pass" else EXIT_FAIL


def _cmd_represent(args) -> int:
    model = load_model(args.model)
    if not getattr(model, "is_binary", False) or not hasattr(model, "types"):
        raise ModelValidationError("represent needs a factored binary model; use `ordered` for K > 2")
    try:
        rep = construct_representation(model, anchor=args.anchor)
    except MonotonicityError as exc:
        log.error("%s; witnesses: %s", exc, exc.witnesses)
        return EXIT_FAIL
    rep = normalize_uniform(rep, model)
    _emit(canonical_json(representation_to_dict(rep)), args.out)
    return EXIT_PASS


def _cmd_ordered(args) -> int:
    model = load_model(args.model)
    try:
        rep = construct_ordered_representation(model)
    except (MonotonicityError, AmbiguousIndexError) as exc:
        log.error("%s", exc)
        return EXIT_FAIL
    if not verify_ordered(model, rep):
        return EXIT_FAIL
    _emit(canonical_json(threshold_rep_to_dict(rep)), args.out)
    return EXIT_PASS


def _cmd_simulate(args) -> int:
    try:
        spec = DgpSpec.from_dict(json.loads(Path(args.spec).read_text()))
    except (TypeError, ValueError, json.JSONDecodeError) as exc:
        raise IngestionError(f"bad spec file: {exc}") from None
    model = generate_model(spec)
    if args.model_out:
        Path(args.model_out).write_text(model_to_json(model))
    data = sample(model, args.n, args.seed)
    _emit(data.to_csv(), args.out)
    log.info("generated %s model, %d rows, rng %s seed %d", spec.model_class, args.n, RNG_ALGORITHM, args.seed)
    return EXIT_PASS


def _cmd_check_model(args) -> int:
    model = load_model(args.model)
    ci = check_conditional_independence(model)
    summary = {"conditional_independence": bool(ci), "witness": ci.witness}
    ok = bool(ci)
    if ci and hasattr(model, "factor"):
        model = model.factor()
    if ci:
        verdict = classify_monotonicity(model)
        summary["monotonicity"] = verdict.verdict
        summary["witnesses"] = list(verdict.witnesses)
        ok = ok and verdict.is_global
    _emit(canonical_json(summary), args.out)
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (simulate)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="tolerance floor for sample comparisons")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=["json"], default="json")

    parser = argparse.ArgumentParser(prog="clate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"clate {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", parents=[common], help="run every check on a model or a CSV sample")
    p.add_argument("--input", required=True, help="model.json or data.csv")
    p.add_argument("--anchor", help="covariate cell whose propensity column defines m")
    p.add_argument("--min-cell", type=int, default=DEFAULT_MIN_CELL)
    p.add_argument("--bins", help="comma-separated cut points for numeric outcomes")
    for col in ("x", "z", "d", "y"):
        p.add_argument(f"--{col}-col", default=col)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("represent", parents=[common], help="build the latent-index representation")
    p.add_argument("--model", required=True)
    p.add_argument("--anchor")
    p.set_defaults(func=_cmd_represent)

    p = sub.add_parser("ordered", parents=[common], help="build the ordered threshold representation")
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_ordered)

    p = sub.add_parser("simulate", parents=[common], help="generate a model and sample from it")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--model-out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("check-model", parents=[common], help="validate and classify a model file")
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_check_model)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ClateError, OSError, ValueError) as exc:
        if isinstance(exc, ClateError) and not isinstance(exc, (IngestionError, ModelValidationError)):
            log.error("%s", exc)
            return EXIT_FAIL
        log.error("input error: %s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
