"""Command-line entry point ``turbmax``.

Subcommands: ``check``, ``select``, ``sweep``, ``demo`` and ``vf``.  Reports are
JSON on stdout (or ``--out``).  Exit status is 0 on success, 1 when a check
fails or the optimizer misses its tolerance, 2 on unreadable or invalid input.
``TURBMAX_THREADS`` caps the BLAS thread pool.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import os
import sys

import numpy as np

from . import io
from .functional import jensen_defect
from .grid import SpaceTimeGrid
from .growth import IsentropicGrowth, quadratic
from .integrands import builtin_energy, squared_norm
from .measure import MeasureError, young_of_function
from .selector import CandidateCheckError, CandidateSet, HullObjective, maximize, uniqueness_diagnostic

OK, FAILED, INVALID = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _integrand(name: str, growth):
    if name == "energy":
        return builtin_energy(growth)
    if isinstance(growth, IsentropicGrowth):
        raise UsageError("--f variance needs quadratic growth")
    return squared_norm(growth)


def _model_for(growth) -> str:
    return "compressible" if isinstance(growth, IsentropicGrowth) else "incompressible"


def _read_all(paths):
    measures = [io.read_measure(p) for p in paths]
    for p, Y in zip(paths[1:], measures[1:]):
        if Y.grid != measures[0].grid or Y.growth != measures[0].growth:
            raise UsageError(f"{p}: grid or growth differs from {paths[0]}")
    return measures


def _check_one(Y, data, args):
    if _model_for(Y.growth) == "compressible":
        from .compressible import check
    else:
        from .incompressible import check
    return check(Y, data, K=args.dict_k, n_profiles=args.dict_nt, residual_tol=args.tol)


def cmd_check(args) -> int:
    measures = _read_all(args.measures)
    model = args.model or _model_for(measures[0].growth)
    if model != _model_for(measures[0].growth):
        raise UsageError(f"model {model!r} does not match growth {measures[0].growth.kind!r}")
    data = io.read_data(args.data, measures[0].grid)
    results = []
    for p, Y in zip(args.measures, measures):
        rep = _check_one(Y, data, args)
        results.append({"path": p, **rep.to_dict()})
    passed = all(r["passed"] for r in results)
    _emit(io.dumps({"command": "check", "model": model, "passed": passed, "results": results}), args.out)
    return OK if passed else FAILED


def cmd_select(args) -> int:
    measures = _read_all(args.candidates)
    growth = measures[0].growth
    f = _integrand(args.f, growth)
    if args.skip_check:
        cs = CandidateSet(measures, "abstract")
    else:
        if not args.data:
            raise UsageError("select verifies candidates against --data; pass it or use --skip-check")
        data = io.read_data(args.data, measures[0].grid)
        cs = CandidateSet(measures, args.model or _model_for(growth), data, residual_tol=args.tol_check)
    res = maximize(cs, f, tol=args.tol, max_iter=args.max_iter)
    out = {"command": "select", "f": args.f, "n_candidates": len(cs), **res.to_dict()}
    ok = res.converged
    if args.restarts:
        rng = np.random.default_rng(args.seed)
        runs = [res] + [
            maximize(cs, f, tol=args.tol, max_iter=args.max_iter, theta0=rng.dirichlet(np.ones(len(cs))))
            for _ in range(args.restarts)
        ]
        if all(r.converged for r in runs) and f.strictly_convex:
            u = uniqueness_diagnostic(runs)
            out["uniqueness"] = u.to_dict()
            ok = ok and u.passed
        else:
            out["uniqueness"] = {"skipped": "unconverged restart or integrand not strictly convex"}
            ok = ok and all(r.converged for r in runs)
    _emit(io.dumps(out), args.out)
    return OK if ok else FAILED


def cmd_sweep(args) -> int:
    if len(args.candidates) != 2:
        raise UsageError("sweep needs exactly two candidates")
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    measures = _read_all(args.candidates)
    H = HullObjective(measures, _integrand(args.f, measures[0].growth))
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "value"])
    for tau in np.linspace(0.0, 1.0, args.samples):
        w.writerow([repr(float(tau)), repr(H.value(np.array([tau, 1.0 - tau])))])
    _emit(buf.getvalue(), args.out)
    return OK


def _vector(text: str) -> np.ndarray:
    try:
        v = np.array([float(c) for c in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}") from exc
    if not np.all(np.isfinite(v)):
        raise argparse.ArgumentTypeError("vector entries must be finite")
    return v


def cmd_demo(args) -> int:
    v1 = args.v1 if args.v1 is not None else np.array([1.0, 0.0])
    v2 = args.v2 if args.v2 is not None else np.array([-1.0, 0.0])
    if v1.shape != v2.shape:
        raise UsageError("--v1 and --v2 need the same dimension")
    grid = SpaceTimeGrid(args.T, v1.size, args.nt, args.nx)
    Y1 = young_of_function(np.tile(v1, (grid.n_cells, 1)), grid)
    Y2 = young_of_function(np.tile(v2, (grid.n_cells, 1)), grid)
    f = _integrand(args.f, quadratic())
    res = maximize([Y1, Y2], f)
    c = 1.0 if args.f == "variance" else 0.5
    analytic = 0.25 * c * float(np.sum((v1 - v2) ** 2)) * grid.total_volume
    degenerate = bool(np.array_equal(v1, v2))
    out = {
        "command": "demo",
        "f": args.f,
        "grid": {"T": grid.T, "d": grid.d, "nt": grid.nt, "nx": grid.nx},
        "v1": [float(v) for v in v1],
        "v2": [float(v) for v in v2],
        "tau": float(res.theta.theta[0]),
        "tau_analytic": None if degenerate else 0.5,
        "value": res.value,
        "value_analytic": analytic,
        "rel_error": abs(res.value - analytic) / max(abs(analytic), 1e-300) if analytic else abs(res.value),
        "gap": res.gap,
        "degenerate": degenerate,
    }
    if degenerate:
        out["note"] = "v1 == v2: every tau is optimal"
    _emit(io.dumps(out), args.out)
    return OK if res.converged else FAILED


def cmd_vf(args) -> int:
    Y = io.read_measure(args.measure)
    r = jensen_defect(Y, _integrand(args.f, Y.growth))
    out = {
        "command": "vf",
        "path": args.measure,
        "f": args.f,
        "value": r.value,
        "oscillation_part": r.oscillation_part,
        "concentration_part": r.concentration_part,
        "total_energy": r.total_energy,
    }
    _emit(io.dumps(out), args.out)
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="turbmax", description="Measure-valued solutions and maximal selection.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="weak-form residuals and energy admissibility")
    c.add_argument("measures", nargs="+")
    c.add_argument("--model", choices=["incompressible", "compressible"])
    c.add_argument("--data", required=True, help="initial data file")
    c.add_argument("--tol", type=float, default=None, help="normalized residual tolerance")
    c.add_argument("--dict-k", type=int, default=3, help="largest wave-number entry")
    c.add_argument("--dict-nt", type=int, default=4, help="number of time profiles")
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("select", help="maximize V_f over the hull of the candidates")
    s.add_argument("candidates", nargs="+")
    s.add_argument("--model", choices=["incompressible", "compressible"])
    s.add_argument("--data")
    s.add_argument("--f", choices=["energy", "variance"], default="energy")
    s.add_argument("--tol", type=float, default=None, help="Frank-Wolfe gap tolerance")
    s.add_argument("--tol-check", type=float, default=None, help="residual tolerance for candidate checks")
    s.add_argument("--restarts", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iter", type=int, default=10_000)
    s.add_argument("--skip-check", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_select)

    w = sub.add_parser("sweep", help="V_f along the segment between two candidates, as CSV")
    w.add_argument("candidates", nargs="+")
    w.add_argument("--samples", type=int, default=11)
    w.add_argument("--f", choices=["energy", "variance"], default="variance")
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)

    d = sub.add_parser("demo", help="two constant velocity fields and their maximal mixture")
    d.add_argument("--v1", type=_vector)
    d.add_argument("--v2", type=_vector)
    d.add_argument("--f", choices=["energy", "variance"], default="variance")
    d.add_argument("--T", type=float, default=1.0)
    d.add_argument("--nt", type=int, default=8)
    d.add_argument("--nx", type=int, default=8)
    d.add_argument("--out")
    d.set_defaults(func=cmd_demo)

    v = sub.add_parser("vf", help="evaluate V_f of one measure")
    v.add_argument("measure")
    v.add_argument("--f", choices=["energy", "variance"], default="energy")
    v.add_argument("--out")
    v.set_defaults(func=cmd_vf)
    return p


def _threads():
    raw = os.environ.get("TURBMAX_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"TURBMAX_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"TURBMAX_THREADS must be a positive integer, got {raw!r}")
    return n


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        n = _threads()
        if n is None:
            return args.func(args)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=n):
            return args.func(args)
    except CandidateCheckError as exc:
        print(f"turbmax: {exc}", file=sys.stderr)
        return FAILED
    except (io.FileFormatError, MeasureError, UsageError, ValueError) as exc:
        print(f"turbmax: {exc}", file=sys.stderr)
        return INVALID


if __name__ == "__main__":
    sys.exit(main())
