"""Command-line front end.

Structured single-point results go to JSON, sweeps to CSV. Exit codes:
0 success, 2 invalid flags, 3 not found or region mismatch, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import conjugacy, dynamics, maps, regions, renorm
from .exceptions import EBMError, InvalidParameters

SCHEMA_VERSION = 1


# ---------------------------------------------------------------- output


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(payload: dict) -> str:
    body = {"schema_version": SCHEMA_VERSION, **payload}
    return json.dumps(_clean(body), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def dump_csv(columns: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema_version", *columns])
    for row in rows:
        w.writerow([SCHEMA_VERSION, *(_fmt(row[c]) for c in columns)])
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _threads() -> int:
    env = os.environ.get("EBM_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = max(1, int(env))
        except ValueError:
            raise InvalidParameters("EBM_THREADS must be an integer") from None
    return n


def _apply_thread_cap():
    if "EBM_THREADS" in os.environ:
        import numba

        numba.set_num_threads(min(_threads(), numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------- commands


def cmd_region(args) -> int:
    _emit(dump_json({"command": "region", **regions.region_report(args.a, args.b).to_dict()}), args.output)
    return 0


def _map_from_args(args) -> maps.PiecewiseMap:
    need = {"psi": ("a", "b"), "lambda": ("t",), "gamma": ("mu",), "tent": ("mu",)}[args.map]
    missing = [k for k in need if getattr(args, k) is None]
    if missing:
        raise InvalidParameters(f"--map {args.map} needs " + ", ".join("--" + k for k in missing))
    return maps.make_map(args.map, **{k: getattr(args, k) for k in need})


def cmd_attractors(args) -> int:
    m = _map_from_args(args)
    census = dynamics.attractor_census(m, args.seeds, args.len, args.burn, args.grid, args.seed, args.power)
    payload = {"command": "attractors", "map": args.map,
               "params": {k: getattr(args, k) for k in ("a", "b", "t", "mu") if getattr(args, k) is not None},
               "seeds": args.seeds, "orbit_len": args.len, "burn_in": args.burn, "rng_seed": args.seed,
               **census.to_dict()}
    if m.kind == maps.K.PSI:
        n = regions.p1n_index(m.a)
        for r in ([regions.P1n(n), regions.P2n(n)] if n else []):
            if regions.in_region(r, m.a, m.b):
                payload["predicted_count"] = regions.attractor_count_prediction(r)
                payload["region"] = str(r)
    _emit(dump_json(payload), args.output)
    if args.cells_csv:
        rows = []
        for k, att in enumerate(census.attractors):
            for x, y in att.occupancy.cell_centers():
                rows.append({"attractor": k, "x": x, "y": y})
        _emit(dump_csv(["attractor", "x", "y"], rows), args.cells_csv)
    return 0


def cmd_renorm(args) -> int:
    nodes = renorm.renorm_tree(args.a, args.b, args.depth)
    payload = {"command": "renorm", "a": args.a, "b": args.b, "depth": args.depth,
               "nodes": [n.to_dict() for n in nodes]}
    if args.op:
        payload["renorm_depth"] = renorm.renorm_depth(args.a, args.b, args.op, args.max_n)
        payload["op"] = renorm.as_op(args.op).value
    _emit(dump_json(payload), args.output)
    return 0


def cmd_cascade(args) -> int:
    res = renorm.cascade_search(args.n, args.tsteps, args.op)
    _emit(dump_json({"command": "cascade", "tsteps": args.tsteps, **res.to_dict()}), args.output)
    return 0


def _suite_spectral(args) -> dict:
    out = {"checks": []}
    expected = np.array([[4.0, 0.0], [2.0 - math.sqrt(2.0), 3.0 + 2.0 * math.sqrt(2.0)]])
    for op in renorm.RenormOp:
        sd = renorm.spectral(op)
        num = numeric_jacobian(op, *renorm.FIXED_POINT)
        eig_err = max(abs(sd.eigenvalues[0] - 4.0), abs(sd.eigenvalues[1] - (3.0 + 2.0 * math.sqrt(2.0))))
        check = {"op": op.value, "eigenvalues": list(sd.eigenvalues), "eigenvectors": [list(v) for v in sd.eigenvectors],
                 "eigenvalue_error": eig_err, "passed": eig_err < 1e-6}
        if op is renorm.RenormOp.Delta:
            check["jacobian_error"] = float(np.abs(num - expected).max())
            check["passed"] = check["passed"] and check["jacobian_error"] < 1e-6
        out["checks"].append(check)
    return out


def numeric_jacobian(op, a: float, b: float, h: float = 1e-6) -> np.ndarray:
    cols = []
    for da, db in ((h, 0.0), (0.0, h)):
        p = np.array(renorm.apply(op, a + da, b + db))
        m = np.array(renorm.apply(op, a - da, b - db))
        cols.append((p - m) / (2.0 * h))
    return np.column_stack(cols)


def _suite_conjugacy(args) -> dict:
    out = {"checks": []}
    for kind, (_, _, region) in conjugacy.RESIDUAL_KINDS.items():
        worst = 0.0
        for a, b in regions.sample_region(region, args.params, args.seed):
            worst = max(worst, conjugacy.conjugacy_residual(kind, (a, b), args.samples, args.seed).sup)
        out["checks"].append({"kind": kind, "sup_residual": worst, "passed": worst < 1e-9})
    return out


def _suite_invariance(args) -> dict:
    out = {"checks": []}
    for name, region, power in (("RectP1", regions.P1, 1), ("Delta", regions.PDELTA, 4), ("Pi", regions.P3, 4)):
        worst = 0.0
        for a, b in regions.sample_region(region, args.params, args.seed):
            dom = conjugacy.named_domain(name, (a, b))
            worst = max(worst, conjugacy.invariance_check((a, b), dom, power, args.samples, args.seed))
        out["checks"].append({"domain": name, "power": power, "max_violation": worst, "passed": worst < 1e-10})
    least = math.inf
    for a, _ in regions.sample_region(regions.PDELTA, args.params, args.seed):
        hi = regions.region_bounds(regions.PDELTA, a)[1]
        b = hi + 0.01
        if not regions.in_region(regions.P, a, b):
            continue
        dom = conjugacy.named_domain("Delta", (a, b))
        least = min(least, conjugacy.invariance_check((a, b), dom, 4, args.samples, args.seed))
    out["checks"].append({"domain": "Delta", "power": 4, "outside_region": True, "min_violation": least,
                          "passed": least > 1e-3})
    return out


def _suite_continuity(args) -> dict:
    worst = 0.0
    for a, b in regions.sample_region(regions.P, max(args.params, 100), args.seed):
        worst = max(worst, conjugacy.branch_disagreement((a, b), max(args.samples // 100, 25), args.seed))
    return {"checks": [{"max_disagreement": worst, "passed": worst < 1e-12}]}


def _suite_lyapunov(args) -> dict:
    checks = []
    for m, expected in ((maps.PsiMap(1.2, 1.1), math.log(1.2)), (maps.LambdaMap(0.8), math.log(0.8 * math.sqrt(2.0)))):
        seed = conjugacy.interior_seeds(1, args.seed)[0]
        est = dynamics.lyapunov(dynamics.OrbitSpec(m, seed, 0, 100_000))
        err = max(abs(est.lambda1 - expected), abs(est.lambda2 - expected))
        checks.append({"map": repr(m), "lambda1": est.lambda1, "lambda2": est.lambda2, "expected": expected,
                       "error": err, "passed": err < 1e-9})
    return {"checks": checks}


SUITES = {
    "spectral": _suite_spectral,
    "conjugacy": _suite_conjugacy,
    "invariance": _suite_invariance,
    "continuity": _suite_continuity,
    "lyapunov": _suite_lyapunov,
}


def cmd_verify(args) -> int:
    result = SUITES[args.suite](args)
    passed = all(c["passed"] for c in result["checks"])
    _emit(dump_json({"command": "verify", "suite": args.suite, "samples": args.samples, "rng_seed": args.seed,
                     "passed": passed, **result}), args.output)
    return 0 if passed else 4


def _sweep_points(args) -> list[dict]:
    if args.curve:
        lo, hi, steps = args.t_range
        if int(steps) < 2:
            raise InvalidParameters("steps must be at least 2")
        pts = []
        for t in np.linspace(lo, hi, int(steps)):
            a, b = regions.gamma0(float(t))
            pts.append({"t": float(t), "a": a, "b": b})
        return pts
    if not (args.a_range and args.b_range):
        raise InvalidParameters("sweep needs --a-range and --b-range, or --curve gamma0")
    (alo, ahi, asteps), (blo, bhi, bsteps) = args.a_range, args.b_range
    if int(asteps) < 2 or int(bsteps) < 2:
        raise InvalidParameters("steps must be at least 2")
    if not (1.0 <= alo <= ahi <= 2.0 and 1.0 <= blo <= bhi <= 2.0):
        raise InvalidParameters("sweep ranges must lie in [1, 2] x [1, 2]")
    return [{"a": float(a), "b": float(b)}
            for a in np.linspace(alo, ahi, int(asteps)) for b in np.linspace(blo, bhi, int(bsteps))]


def _sweep_one(job: str, args, pt: dict) -> dict:
    a, b = pt["a"], pt["b"]
    row = dict(pt)
    in_p = regions.in_region(regions.P, a, b)
    if job == "region":
        rep = regions.region_report(a, b) if 1.0 < a <= 2.0 else None
        for key in ("P", "P1", "P2", "PDelta", "P3"):
            row[key] = bool(rep and rep.memberships.get(key))
        row["P1n"] = rep.p1n if rep else None
        row["P2n"] = rep.p2n if rep else None
    elif job == "renorm_depth":
        row["depth"] = renorm.renorm_depth(a, b, args.op, args.max_n)
    elif job == "lyapunov":
        if in_p:
            seed = conjugacy.interior_seeds(1, args.seed)[0]
            est = dynamics.lyapunov(dynamics.OrbitSpec(maps.PsiMap(a, b), seed, args.burn, args.len))
            row["lambda1"], row["lambda2"] = est.lambda1, est.lambda2
        else:
            row["lambda1"] = row["lambda2"] = None
    elif job == "census":
        if in_p:
            c = dynamics.attractor_census(maps.PsiMap(a, b), args.seeds, args.len, args.burn, args.grid, args.seed,
                                          args.power)
            row["distinct_count"], row["pieces_total"] = c.distinct_count, c.pieces_total
        else:
            row["distinct_count"] = row["pieces_total"] = None
    row["in_P"] = in_p
    return row


SWEEP_COLUMNS = {
    "region": ["P", "P1", "P2", "PDelta", "P3", "P1n", "P2n"],
    "renorm_depth": ["depth"],
    "lyapunov": ["lambda1", "lambda2"],
    "census": ["distinct_count", "pieces_total"],
}


def cmd_sweep(args) -> int:
    pts = _sweep_points(args)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda p: _sweep_one(args.job, args, p), pts))
    cols = (["t"] if args.curve else []) + ["a", "b", "in_P"] + SWEEP_COLUMNS[args.job]
    _emit(dump_csv(cols, rows), args.output)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ebmlab", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON job file mirroring the command-line flags")
    sub = p.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("--output", "-o", help="write to this file instead of stdout")
        sp.add_argument("--seed", type=int, default=0, help="rng seed (default 0)")

    sp = sub.add_parser("region", help="region memberships and fiber bounds")
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--b", type=float, required=True)
    common(sp)
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("attractors", help="attractor census by orbit simulation")
    sp.add_argument("--map", choices=["psi", "lambda", "gamma", "tent"], default="psi")
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--t", type=float)
    sp.add_argument("--mu", type=float)
    _census_flags(sp)
    sp.add_argument("--cells-csv", help="also write occupied cell centres to this CSV")
    common(sp)
    sp.set_defaults(func=cmd_attractors)

    sp = sub.add_parser("renorm", help="renormalization tree")
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--depth", type=int, default=1)
    sp.add_argument("--op", choices=["Delta", "Pi"], help="also report the depth under this operator")
    sp.add_argument("--max-n", type=int, default=64)
    common(sp)
    sp.set_defaults(func=cmd_renorm)

    sp = sub.add_parser("cascade", help="interval search along gamma0")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--tsteps", type=int, default=20_000)
    sp.add_argument("--op", choices=["Delta", "Pi"], default="Delta")
    common(sp)
    sp.set_defaults(func=cmd_cascade)

    sp = sub.add_parser("verify", help="numerical verification suites")
    sp.add_argument("--suite", choices=sorted(SUITES), required=True)
    sp.add_argument("--samples", type=int, default=1000, help="points per parameter")
    sp.add_argument("--params", type=int, default=10, help="parameter samples per region")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="per-point jobs over a parameter grid or gamma0")
    sp.add_argument("--job", choices=sorted(SWEEP_COLUMNS), required=True)
    sp.add_argument("--a-range", type=float, nargs=3, metavar=("LO", "HI", "STEPS"))
    sp.add_argument("--b-range", type=float, nargs=3, metavar=("LO", "HI", "STEPS"))
    sp.add_argument("--curve", choices=["gamma0"])
    sp.add_argument("--t-range", type=float, nargs=3, metavar=("LO", "HI", "STEPS"),
                    default=[regions.T_MIN, regions.T_MAX, 1000])
    sp.add_argument("--op", choices=["Delta", "Pi"], default="Delta")
    sp.add_argument("--max-n", type=int, default=64)
    _census_flags(sp, seeds=16, length=100_000)
    common(sp)
    sp.set_defaults(func=cmd_sweep)
    return p


def _census_flags(sp, seeds: int = 64, length: int = 1_000_000):
    sp.add_argument("--seeds", type=int, default=seeds)
    sp.add_argument("--len", type=int, default=length)
    sp.add_argument("--burn", type=int, default=10_000)
    sp.add_argument("--grid", type=int, default=512)
    sp.add_argument("--power", type=int, default=1)


def config_to_argv(path: str) -> list[str]:
    """Turn a JSON job file into the equivalent argument vector."""
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if "command" not in cfg:
        raise InvalidParameters("config needs a 'command' key")
    argv = [str(cfg["command"])]
    params = dict(cfg.get("parameters", {}))
    if "rng_seed" in cfg:
        params["seed"] = cfg["rng_seed"]
    if cfg.get("output_path"):
        params["output"] = cfg["output_path"]
    for key, val in params.items():
        flag = "--" + str(key).replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif isinstance(val, (list, tuple)):
            argv += [flag, *map(str, val)]
        elif val is not None:
            argv += [flag, str(val)]
    return argv


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = parser.parse_args(config_to_argv(args.config))
        if not args.command:
            parser.print_usage(sys.stderr)
            return 2
        _apply_thread_cap()
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except EBMError as exc:
        sys.stderr.write(dump_json({"error": type(exc).__name__, "message": str(exc)}))
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(dump_json({"error": type(exc).__name__, "message": str(exc)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
