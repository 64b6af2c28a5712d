"""Command-line interface: ``dlngeo geodesic | verify | lift``.

Status goes to standard output as one JSON object per line (``--pretty`` for
a table).  Exit codes: 0 success, 1 failed verification, 2 invalid input,
3 endpoints not aligned, 4 shooting did not converge, 5 numerical failure.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import balanced as bal
from . import bw, io, solver, verify
from .errors import AlignmentError, DomainError, GeodesicError, NoConvergence, RankError

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_ALIGN, EXIT_NOCONV, EXIT_NUMERIC = 0, 1, 2, 3, 4, 5


def _emit(record, pretty, out=None):
    out = out or sys.stdout
    if pretty:
        width = max(len(k) for k in record)
        for k, v in record.items():
            out.write(f"{k:<{width}}  {v}\n")
        out.write("\n")
    else:
        out.write(json.dumps(record, sort_keys=True) + "\n")
    out.flush()


def _fail(code, message):
    sys.stderr.write(f"dlngeo: error: {message}\n")
    return code


def _bw_trajectory(a, b, samples):
    t = np.linspace(0.0, 1.0, samples)
    x = np.stack([bw.bw_geodesic(a, b, tk) for tk in t])
    p = np.stack([bw.bw_momentum(a, b, tk) for tk in t])
    return solver.Trajectory(t, x, p, 2, "bw", {"method": "bw"})


def _geodesic(args):
    a = io.read_matrix(args.a)
    b = io.read_matrix(args.b)
    if a.shape != b.shape:
        raise DomainError(f"a is {a.shape[0]}x{a.shape[0]} but b is {b.shape[0]}x{b.shape[0]}")
    if args.samples < 2:
        raise DomainError("--samples must be at least 2")
    if args.depth < 1:
        raise DomainError("--depth must be a positive integer")
    extra = {}
    if args.method == "closed":
        traj = bal.closed_form_trajectory(args.depth, a, b, args.samples)
    elif args.method == "bw":
        bw.as_spd(a, "a")
        bw.as_spd(b, "b")
        traj = _bw_trajectory(a, b, args.samples)
    else:
        if args.steps % (args.samples - 1):
            raise DomainError(f"--steps {args.steps} must be a multiple of --samples minus one "
                              f"({args.samples - 1})")
        cfg = solver.ShootingConfig(steps=args.steps, tol=args.tol)
        _, traj = solver.solve_bvp_shooting(args.depth, a, b, cfg, samples=args.samples)
        extra = {"iterations": traj.meta["iterations"], "residual": traj.meta["residual"],
                 "steps": args.steps}
    speeds = solver.speed_profile(traj)
    depth = 2 if args.method == "bw" else args.depth
    record = {
        "method": args.method,
        "depth": depth,
        "samples": len(traj),
        "endpoint_residual": float(np.linalg.norm(traj.x[-1] - b)),
        "action": solver.path_action(traj.t, speeds),
        "speed_deviation": solver.relative_variation(speeds),
    }
    record.update(extra)
    if args.out:
        meta = {"depth": depth, "method": args.method, "action": record["action"],
                "residual": record.get("residual", record["endpoint_residual"]),
                "steps": record.get("steps")}
        io.write_trajectory(args.out, traj.t, traj.x, traj.p, meta)
        record["out"] = str(args.out)
    return record


def cmd_geodesic(args):
    try:
        record = _geodesic(args)
    except AlignmentError as exc:
        return _fail(EXIT_ALIGN, f"closed form needs aligned endpoints: {exc}")
    except NoConvergence as exc:
        return _fail(EXIT_NOCONV, str(exc))
    except (DomainError, RankError, ValueError, OSError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    except GeodesicError as exc:
        return _fail(EXIT_NUMERIC, str(exc))
    _emit(record, args.pretty)
    return EXIT_OK


def cmd_verify(args):
    if args.trials < 1:
        return _fail(EXIT_INPUT, "--trials must be positive")
    try:
        outcomes = verify.run_suite(args.suite, args.seed, args.trials)
    except ValueError as exc:
        return _fail(EXIT_INPUT, str(exc))
    for o in outcomes:
        record = {"suite": o.suite, "property": o.property, "kind": o.kind,
                  "status": "pass" if o.passed else "fail", "worst": o.worst,
                  "tol": o.tol, "trials": o.trials}
        if o.detail:
            record["detail"] = json.loads(o.detail)
        _emit(record, args.pretty)
    ok = verify.all_passed(outcomes)
    counted = [o for o in outcomes if o.kind == "property"]
    _emit({"summary": "pass" if ok else "fail",
           "passed": sum(o.passed for o in counted), "total": len(counted),
           "findings": sum(o.kind == "finding" for o in outcomes),
           "seed": args.seed}, args.pretty)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_lift(args):
    try:
        a = io.read_matrix(args.a)
        b = io.read_matrix(args.b)
        if a.shape != b.shape:
            raise DomainError("a and b must have the same size")
        lift = bal.lift_endpoints(a, b, args.depth)
    except AlignmentError as exc:
        return _fail(EXIT_ALIGN, f"endpoints are not aligned: {exc}")
    except (DomainError, RankError, ValueError, OSError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = args.depth
    for tag, w in (("a", lift.a), ("b", lift.b)):
        for i, layer in enumerate(w):
            io.write_matrix(out / f"{tag}_W{n - i}.json", layer)
    io.write_matrix(out / "q.json", lift.q)
    horiz = max(bal.horizontality_residual(lift.params_a, lift.a)[1],
                bal.horizontality_residual(lift.params_a, lift.b)[1])
    record = {
        "depth": n,
        "balance_residual": max(bal.balance_residual(lift.a), bal.balance_residual(lift.b)),
        "horizontality_residual": horiz,
        "phi_residual": max(float(np.linalg.norm(bal.phi(lift.a) - a)),
                            float(np.linalg.norm(bal.phi(lift.b) - b))),
        "out_dir": str(out),
    }
    chord = lift.b - lift.a
    norm = float(np.linalg.norm(chord))
    try:
        record["chord_non_horizontal_fraction"] = (
            bal.horizontal_projection(lift.params_a, chord)[2] / norm if norm else 0.0)
    except GeodesicError:
        record["chord_non_horizontal_fraction"] = None
    _emit(record, args.pretty)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dlngeo", description="Geodesics of deep linear network and Bures-Wasserstein geometries.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geodesic", help="compute a geodesic between two matrices")
    g.add_argument("--a", required=True, help="start point (MatrixFile JSON)")
    g.add_argument("--b", required=True, help="end point (MatrixFile JSON)")
    g.add_argument("--depth", type=int, default=2, help="network depth N (default 2)")
    g.add_argument("--method", choices=("closed", "shooting", "bw"), default="shooting")
    g.add_argument("--samples", type=int, default=101, help="samples on [0, 1] (default 101)")
    g.add_argument("--out", help="trajectory CSV; metadata goes to <out>.json")
    g.add_argument("--steps", type=int, default=1000, help="RK4 steps for shooting (default 1000)")
    g.add_argument("--tol", type=float, default=1e-9, help="shooting residual tolerance (default 1e-9)")
    g.add_argument("--pretty", action="store_true", help="human-readable output")
    g.set_defaults(func=cmd_geodesic)

    v = sub.add_parser("verify", help="run randomized property suites")
    v.add_argument("--suite", choices=verify.SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--pretty", action="store_true")
    v.set_defaults(func=cmd_verify)

    li = sub.add_parser("lift", help="write balanced lifts of aligned endpoints")
    li.add_argument("--a", required=True)
    li.add_argument("--b", required=True)
    li.add_argument("--depth", type=int, required=True)
    li.add_argument("--out-dir", required=True)
    li.add_argument("--pretty", action="store_true")
    li.set_defaults(func=cmd_lift)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
