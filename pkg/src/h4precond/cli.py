"""Command-line entry point: ``h4precond <command> [options]``.

Exit codes: 0 success, 2 bad arguments, 3 numerical failure.
Diagnostics go to stderr; ``QP_LOG=debug|info|quiet`` sets verbosity.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from .errors import NumericalError
from .forms1d import build_constrained_forms, full_eigenbasis, gen_sym_eig
from .pcg import iteration_bound, pcg_demo
from .spectra import (
    DEFAULT_W_LIST,
    REFERENCE_LOG10_KAPPA,
    Table1Row,
    condition_number_dense,
    condition_number_lanczos,
    rows_to_csv,
    rows_to_json,
    table1_report,
)
from .tensor2d import apply_C_inverse, assemble_constrained_system, build_preconditioner, schur_solve

log = logging.getLogger("h4precond")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("QP_LOG", "info").lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO, "quiet": logging.ERROR}
    logging.basicConfig(
        level=levels.get(level, logging.INFO),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _w_list(text: str) -> list:
    try:
        ws = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid degree list {text!r}")
    if not ws or any(w < 0 for w in ws):
        raise argparse.ArgumentTypeError("degrees must be non-negative integers")
    return ws


def _single_w(args) -> int:
    if len(args.w) != 1:
        raise UsageError(f"{args.command} takes a single degree, got {args.w}")
    return args.w[0]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--w", type=_w_list, default=None, help="degree or comma-separated degrees")
    common.add_argument("--method", choices=("dense", "lanczos"), default="dense")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--max-iters", type=int, default=None)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--parallel", type=int, default=None, help="worker count for table1")
    common.add_argument("--eigensolver", choices=("jacobi", "lapack"), default="jacobi", help="dense-path eigensolver")
    common.add_argument("--no-timing", action="store_true", help="write wall_time_s as 0 for reproducible files")

    parser = argparse.ArgumentParser(prog="h4precond", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("table1", parents=[common], help="condition-number table")
    sub.add_parser("eig1d", parents=[common], help="1D eigenvalues mu_i and nu_i")
    sub.add_parser("cond", parents=[common], help="condition number for one W")
    p = sub.add_parser("apply-cinv", parents=[common], help="apply the fast inverse to a coefficient file")
    p.add_argument("--input", required=True, help="CSV with header i,j,value")
    p.add_argument("--rhs", choices=("load", "polynomial"), default="load")
    p = sub.add_parser("solve-constrained", parents=[common], help="Schur-complement solve")
    p.add_argument("--input", default=None, help="CSV with header index,value (default: manufactured)")
    p = sub.add_parser("pcg-demo", parents=[common], help="manufactured-solution PCG run")
    p.add_argument("--no-precond", action="store_true", help="use the identity preconditioner")
    return parser


def _write(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _records_csv(header, records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for rec in records:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in rec])
    return buf.getvalue()


def _emit_records(args, header, records) -> None:
    if args.format == "json":
        text = json.dumps([dict(zip(header, rec)) for rec in records], indent=2) + "\n"
    else:
        text = _records_csv(header, records)
    _write(args, text)


def read_coefficients(path: str, W: int) -> np.ndarray:
    """Read an ``i,j,value`` CSV into a ``(W+1, W+1)`` array; missing entries are zero."""
    n = W + 1
    X = np.zeros((n, n))
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["i", "j", "value"]:
            raise UsageError(f"{path}: expected header i,j,value")
        for row in reader:
            i, j = int(row["i"]), int(row["j"])
            if not (0 <= i < n and 0 <= j < n):
                raise UsageError(f"{path}: index ({i}, {j}) outside 0..{W}")
            X[i, j] = float(row["value"])
    return X


def write_coefficients(X: np.ndarray) -> str:
    n = X.shape[0]
    return _records_csv(("i", "j", "value"), [(i, j, float(X[i, j])) for i in range(n) for j in range(n)])


def _cmd_table1(args) -> int:
    ws = args.w or list(DEFAULT_W_LIST)
    workers = args.parallel if args.parallel else (os.cpu_count() or 1)
    rows = table1_report(ws, method=args.method, max_iters=args.max_iters or 200, seed=args.seed, workers=workers, eigensolver=args.eigensolver)
    for row in rows:
        log.info("W=%d log10(kappa)=%.6f", row.report.W, row.report.log10_kappa)
    text = rows_to_json(rows, not args.no_timing) if args.format == "json" else rows_to_csv(rows, not args.no_timing)
    _write(args, text)
    return EXIT_OK


def _cmd_cond(args) -> int:
    W = _single_w(args)
    if args.method == "dense":
        rep = condition_number_dense(W, eigensolver=args.eigensolver)
    else:
        rep = condition_number_lanczos(W, args.max_iters or 200, args.seed)
    rows = [Table1Row(rep, REFERENCE_LOG10_KAPPA.get(W))]
    text = rows_to_json(rows, not args.no_timing) if args.format == "json" else rows_to_csv(rows, not args.no_timing)
    _write(args, text)
    return EXIT_OK


def _cmd_eig1d(args) -> int:
    W = _single_w(args)
    records = [("mu", i, float(m)) for i, m in enumerate(full_eigenbasis(W).mu)]
    if W >= 2:
        nu = gen_sym_eig(build_constrained_forms(W)).mu
        records += [("nu", i + 3, float(v)) for i, v in enumerate(nu)]
    _emit_records(args, ("basis", "index", "eigenvalue"), records)
    return EXIT_OK


def _cmd_apply_cinv(args) -> int:
    W = _single_w(args)
    rho = read_coefficients(args.input, W)
    beta = apply_C_inverse(build_preconditioner(W), rho, rhs=args.rhs)
    if args.format == "json":
        n = W + 1
        _emit_records(args, ("i", "j", "value"), [(i, j, float(beta[i, j])) for i in range(n) for j in range(n)])
    else:
        _write(args, write_coefficients(beta))
    return EXIT_OK


def _cmd_solve_constrained(args) -> int:
    W = _single_w(args)
    if W < 4:
        raise UsageError("solve-constrained needs W >= 4")
    sys_ = assemble_constrained_system(W)
    size = sys_.n_interior + sys_.n_edge
    p_true = None
    if args.input:
        z = np.zeros(size)
        with open(args.input, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["index", "value"]:
                raise UsageError(f"{args.input}: expected header index,value")
            for row in reader:
                k = int(row["index"])
                if not 0 <= k < size:
                    raise UsageError(f"{args.input}: index {k} outside 0..{size - 1}")
                z[k] = float(row["value"])
    else:
        p_true = np.random.default_rng(args.seed).standard_normal(size)
        z = sys_.apply(p_true)
    p = schur_solve(sys_, z)
    res = np.linalg.norm(sys_.apply(p) - z) / max(np.linalg.norm(z), np.finfo(float).tiny)
    log.info("relative residual %.3e", res)
    if p_true is not None:
        log.info("relative error %.3e", np.linalg.norm(p - p_true) / np.linalg.norm(p_true))
    if res > 1e-9:
        log.error("residual %.3e exceeds 1e-9", res)
        return EXIT_NUMERIC
    _emit_records(args, ("index", "value"), [(k, float(v)) for k, v in enumerate(p)])
    return EXIT_OK


def _cmd_pcg_demo(args) -> int:
    W = _single_w(args)
    demo = pcg_demo(W, tol=args.tol, max_iters=args.max_iters or 500, seed=args.seed, preconditioned=not args.no_precond)
    tr = demo.trace
    log.info("iterations=%d converged=%s relative error=%.3e", tr.iterations, tr.converged, demo.relative_error)
    if not args.no_precond:
        kappa = condition_number_dense(W, eigensolver=args.eigensolver).kappa if W <= 32 else None
        if kappa is not None:
            log.info("sqrt(kappa) bound: %d iterations", iteration_bound(kappa, args.tol))
    _emit_records(args, ("iter", "residual"), [(k, float(r)) for k, r in enumerate(tr.residual_history)])
    if not tr.converged:
        log.error("PCG did not converge in %d iterations", tr.iterations)
        return EXIT_NUMERIC
    return EXIT_OK


COMMANDS = {
    "table1": _cmd_table1,
    "cond": _cmd_cond,
    "eig1d": _cmd_eig1d,
    "apply-cinv": _cmd_apply_cinv,
    "solve-constrained": _cmd_solve_constrained,
    "pcg-demo": _cmd_pcg_demo,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command != "table1" and args.w is None:
        log.error("--w is required for %s", args.command)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (UsageError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
