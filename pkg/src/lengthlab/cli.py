"""lengthlab command-line front end.

Exit codes: 0 pass or certificate, 1 malformed input, 2 a finding that
contradicts a checked inequality or a claimed bound, 3 inconclusive.
Builder parameters ride along as extra flags, e.g. ``--r0 1 --chord 1``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .chart_spaces import SpaceFileError, load_space, parse_point, space_hash
from .conjugacy import (ABConfig, default_schedule, detect_one_sided, detect_symmetric,
                        detect_ultimate, detect_unreachable, ult_conj_radius)
from .cut_locus import (check_radius_chain, global_radii, klingenberg_search, radius_report,
                        reports_csv)
from .fans_homotopy import (build_fan, fan_length_check, long_homotopy_audit, radial_contraction,
                            random_polyline, rotate_to_pole)
from .formats import comparison_bridge_svg, fan_svg, geodesics_csv, jsonl, write_text
from .geodesic_engine import enumerate_geodesics, uniform_minimizing_radius
from .rauch_bridges import (BridgeError, angle_comparison_test, build_bridge, cat_triangle_test,
                            develop_comparison_bridge, meridian_bridge, random_bridge,
                            rauch_conjugate_bound_audit, rel_rauch_audit)

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION, EXIT_INCONCLUSIVE = 0, 1, 2, 3

DETECTORS: Dict[str, Callable] = {
    "one_sided": detect_one_sided,
    "symmetric": detect_symmetric,
    "unreachable": detect_unreachable,
    "ultimate": detect_ultimate,
}


class InputError(ValueError):
    pass


def threads() -> int:
    raw = os.environ.get("LENGTHLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise InputError(f"LENGTHLAB_THREADS must be an integer, got {raw!r}") from exc


def pmap(fn, items: Sequence) -> List:
    """Map in input order, with at most LENGTHLAB_THREADS workers."""
    n = threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _builder_params(extra: Sequence[str]) -> dict:
    params = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or i + 1 >= len(extra):
            raise InputError(f"unrecognized argument {tok!r}; builder parameters take --name value")
        params[tok[2:].replace("-", "_")] = yaml.safe_load(extra[i + 1])
        i += 2
    return params


def _space(args, extra):
    return load_space(args.space, _builder_params(extra))


def _schedule(space, args):
    return default_schedule(space, K=args.K, n=args.n, tau_factor=args.tau_factor, seed=args.seed)


def _emit(args, text: str) -> None:
    write_text(getattr(args, "out", None), text)


def _manifest(args, space, extra) -> None:
    path = getattr(args, "manifest", None)
    if not path:
        return
    doc = {"command": args.command, "args": {k: v for k, v in sorted(vars(args).items())
                                             if k not in ("func",)},
           "builder_params": _builder_params(extra), "space_hash": space_hash(space),
           "versions": {"lengthlab": __version__, "numpy": np.__version__},
           "threads": threads()}
    write_text(path, json.dumps(doc, sort_keys=True, indent=1, default=str) + "\n")


# commands

def cmd_space(args, extra) -> int:
    space = _space(args, extra)
    _manifest(args, space, extra)
    if args.action == "describe":
        doc = space.describe()
        doc["hash"] = space_hash(space)
        doc["delta_local"] = space.delta_local
        doc["tol_rad"] = space.tol_rad
        doc["warnings"] = space.warnings()
        _emit(args, jsonl([doc]))
        return EXIT_OK
    rng = np.random.default_rng(args.seed)
    delta = uniform_minimizing_radius(space, samples=args.samples, rng=rng)
    rec = {"space": space.name, "witness_delta": space.witness_delta, "sampled_delta": delta,
           "warnings": space.warnings()}
    ok = space.witness_delta is None or delta > 0
    rec["ok"] = ok
    _emit(args, jsonl([rec]))
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_dist(args, extra) -> int:
    space = _space(args, extra)
    _manifest(args, space, extra)
    p, q = parse_point(space, args.from_), parse_point(space, args.to)
    _emit(args, f"{space.distance(p, q):.12g}\n")
    return EXIT_OK


def _geodesics(space, args):
    p, q = parse_point(space, args.from_), parse_point(space, args.to)
    L = args.lmax if args.lmax is not None else space.distance(p, q) + 1e-9
    gs = enumerate_geodesics(space, p, q, L, args.eps_sep)
    return sorted(gs, key=lambda g: g.sort_key()), gs.truncated


def cmd_geodesics(args, extra) -> int:
    space = _space(args, extra)
    _manifest(args, space, extra)
    gs, truncated = _geodesics(space, args)
    _emit(args, geodesics_csv(gs))
    return EXIT_INCONCLUSIVE if truncated else EXIT_OK


def _pick_geodesic(space, args):
    if args.ray:
        p = parse_point(space, args.ray)
        rays = [g for g in space.rays(p, args.length, n_dirs=args.n_dirs) if g.length > 0]
        if not rays:
            raise InputError("no ray leaves that point")
        return rays[args.index % len(rays)]
    gs, _ = _geodesics(space, args)
    if not gs:
        raise InputError("no geodesic between those points within --lmax")
    if args.index >= len(gs):
        raise InputError(f"--index {args.index} but only {len(gs)} geodesics")
    return gs[args.index]


def cmd_conj(args, extra) -> int:
    space = _space(args, extra)
    sched = _schedule(space, args)
    _manifest(args, space, extra)
    if args.radius:
        p = parse_point(space, args.radius)
        res = ult_conj_radius(space, p, args.length or space.horizon, sched, n_dirs=args.n_dirs)
        _emit(args, jsonl([{"space": space.name, "point": str(p), "ult_conj": res.value,
                            "formatted": str(res), "bounded": res.bounded, "L_max": res.L_max,
                            "schedule": sched.hash, "eta": space.eta, "caveats": res.caveats}]))
        return EXIT_OK
    gamma = _pick_geodesic(space, args)
    names = list(DETECTORS) if args.detector == "all" else [args.detector]
    recs, inconclusive = [], False
    for name in names:
        v = DETECTORS[name](space, gamma, sched)
        rec = v.to_record(space.name, gamma)
        rec["eta"] = space.eta
        recs.append(rec)
        inconclusive |= v.inconclusive
    _emit(args, jsonl(recs))
    return EXIT_INCONCLUSIVE if inconclusive else EXIT_OK


def cmd_radii(args, extra) -> int:
    space = _space(args, extra)
    sched = _schedule(space, args)
    _manifest(args, space, extra)
    H = args.horizon if args.horizon is not None else space.horizon
    if args.global_:
        reps = [global_radii(space, H, sched, n_random=args.n_random, n_dirs=args.n_dirs,
                             ult_conj=not args.no_ult_conj, seed=args.seed)]
    else:
        names = args.point or list(space.named_points())[:1]
        pts = [(nm, parse_point(space, nm)) for nm in names]
        reps = pmap(lambda item: radius_report(space, item[1], H, sched, n_dirs=args.n_dirs,
                                               ult_conj=not args.no_ult_conj, point_name=item[0]),
                    pts)
    _emit(args, reports_csv(reps))
    bad = [c for c in (check_radius_chain(space, r) for r in reps) if not c.ok]
    if bad:
        for c in bad:
            print("radius chain violated: " + "; ".join(c.violations), file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_klingenberg(args, extra) -> int:
    space = _space(args, extra)
    sched = _schedule(space, args)
    _manifest(args, space, extra)
    res = klingenberg_search(space, args.horizon, sched, n_random=args.n_random, n_dirs=args.n_dirs,
                             seed=args.seed)
    rec = {"space": space.name, "branch": res.branch, "min_rad": res.min_rad,
           "p": res.p, "q": res.q, "pair_distance": res.pair_distance,
           "loop_length": res.loop_length, "certified": res.certified, "caveats": res.caveats,
           "schedule": sched.hash, "eta": space.eta,
           "horizon": args.horizon if args.horizon is not None else space.horizon}
    _emit(args, jsonl([rec]))
    return EXIT_OK if res.certified else EXIT_INCONCLUSIVE


def _claims_cba(space, kappa) -> bool:
    return space.cba_kappa is not None and kappa >= space.cba_kappa


def cmd_rauch(args, extra) -> int:
    space = _space(args, extra)
    _manifest(args, space, extra)
    kappa = args.kappa if args.kappa is not None else space.cba_kappa
    if kappa is None:
        raise InputError(f"{space.name} has no curvature bound; pass --kappa")
    recs, code = [], EXIT_OK
    if args.mode in ("triangles", "angles"):
        fn = cat_triangle_test if args.mode == "triangles" else angle_comparison_test
        res = fn(space, kappa, args.n_count, seed=args.seed)
        rec = res.to_dict()
        rec["claimed_cba"] = _claims_cba(space, kappa)
        recs.append(rec)
        if not res.ok and rec["claimed_cba"]:
            code = EXIT_VIOLATION
    elif args.mode == "bridges":
        rng = np.random.default_rng(args.seed)
        for _ in range(args.n_count):
            got = random_bridge(space, rng, kappa)
            if got is None:
                continue
            br, r, R = got
            rec = rel_rauch_audit(br, r, R).to_dict()
            rec["space"] = space.name
            recs.append(rec)
            if not rec["holds"]:
                code = EXIT_VIOLATION
        if args.svg and recs:
            cb = develop_comparison_bridge(br)
            write_text(args.svg, comparison_bridge_svg(cb))
    elif args.mode == "meridian":
        for h in args.heights:
            sp, g, s = meridian_bridge(h)
            br = build_bridge(sp, g, s, N=8, align=(args.r, args.R))
            rec = rel_rauch_audit(br, args.r, args.R).to_dict()
            rec["gap_to_limit"] = rec["rhs"] - rec["limit"]
            recs.append(rec)
            if not rec["holds"]:
                code = EXIT_VIOLATION
        if args.svg:
            write_text(args.svg, comparison_bridge_svg(develop_comparison_bridge(br)))
    else:
        rep = rauch_conjugate_bound_audit(space, kappa, _schedule(space, args), args.n_count,
                                          horizon=args.horizon, seed=args.seed)
        recs.append(rep.to_dict())
        if rep.violations:
            code = EXIT_VIOLATION
        elif rep.inconclusive:
            code = EXIT_INCONCLUSIVE
    _emit(args, jsonl(recs))
    return code


def cmd_fan(args, extra) -> int:
    space = _space(args, extra)
    _manifest(args, space, extra)
    bound = args.ult_bound if args.ult_bound is not None else math.inf
    curves = []
    if args.polyline:
        curves.append([parse_point(space, t) for t in args.polyline.split(";") if t.strip()])
    else:
        rng = np.random.default_rng(args.seed)
        curves += [random_polyline(space, rng) for _ in range(args.random)]
    recs, code = [], EXIT_OK
    fan = None
    for pts in curves:
        if len(pts) < 2:
            raise InputError("a polyline needs at least two points")
        fan = build_fan(space, pts, bound, n_samples=args.samples)
        chk = fan_length_check(fan)
        rec = fan.to_dict()
        rec.pop("lengths")
        rec.update({"space": space.name, "length_check": chk.ok, "worst_excess": chk.worst,
                    "tol_fan": chk.tol})
        recs.append(rec)
        if not chk.ok:
            code = EXIT_VIOLATION
        elif fan.status == "break" and code == EXIT_OK:
            code = EXIT_INCONCLUSIVE
    if args.svg and fan is not None:
        write_text(args.svg, fan_svg(fan))
    _emit(args, jsonl(recs))
    return code


HOMOTOPY_FIXTURES = ("equator-rotate", "digon-radial")


def _fixture(name: str, S: int, T: int):
    from .chart_spaces import build
    from .paths import ArcPiece, GeodesicPath
    if name == "equator-rotate":
        space = build("unit_sphere")
        e = space.point("e")
        c = GeodesicPath(space, [ArcPiece("S", np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), 2 * math.pi)],
                         base=e, closed=True)
        return space, c, rotate_to_pole(space, S, T)
    space = build("tetra_bisphere")
    v0, v1 = space.point("v0"), space.point("v1")
    g1, g2 = sorted(enumerate_geodesics(space, v0, v1, 2.0), key=lambda g: g.sort_key())[:2]
    c = g1.concat(g2.reversed(), closed=True)
    pts = [c.point_at(s / S) for s in range(S + 1)]
    return space, c, radial_contraction(space, space.point("x1"), pts, T)


def cmd_homotopy(args, extra) -> int:
    space, c, H = _fixture(args.fixture, args.S, args.T)
    rep = long_homotopy_audit(space, c, H, args.ult_bound)
    rec = rep.to_dict()
    rec["space"] = space.name
    rec["fixture"] = args.fixture
    _emit(args, jsonl([rec]))
    if rep.status == "ult_bound_violation":
        return EXIT_VIOLATION
    if rep.status in ("fan_failure", "unexpected_closed"):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_ab(args, extra) -> int:
    c1, c2 = ABConfig.constant_checks(args.T0)
    ok = c1 < 0.75 and c2 < 15 / 12
    _emit(args, jsonl([{"T0": args.T0, "first": c1, "second": c2, "first_bound": 0.75,
                        "second_bound": 15 / 12, "ok": ok}]))
    return EXIT_OK if ok else EXIT_VIOLATION


# parser

def _common(p, schedule=False, out=True):
    p.add_argument("--space", required=True, help="catalog name, YAML file or YAML text")
    if out:
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--manifest", default=None, help="write a run manifest here")
    p.add_argument("--seed", type=int, default=0)
    if schedule:
        p.add_argument("--K", type=int, default=4, help="schedule levels")
        p.add_argument("--n", type=int, default=32, help="perturbations per level")
        p.add_argument("--tau-factor", type=float, default=8.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lengthlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("space", help="describe or validate a space")
    p.add_argument("action", choices=("describe", "validate"))
    _common(p)
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(func=cmd_space)

    p = sub.add_parser("dist", help="distance between two points")
    _common(p)
    p.add_argument("--from", dest="from_", required=True)
    p.add_argument("--to", required=True)
    p.set_defaults(func=cmd_dist)

    for name, fn in (("geodesics", cmd_geodesics), ("conj", cmd_conj)):
        p = sub.add_parser(name, help="enumerate geodesics" if name == "geodesics" else "conjugacy detectors")
        _common(p, schedule=name == "conj")
        p.add_argument("--from", dest="from_")
        p.add_argument("--to")
        p.add_argument("--lmax", type=float, default=None)
        p.add_argument("--eps-sep", type=float, default=1e-6)
        if name == "conj":
            p.add_argument("--ray", help="use a ray from this point instead of --from/--to")
            p.add_argument("--radius", help="report the ultimate conjugate radius at this point")
            p.add_argument("--length", type=float, default=None)
            p.add_argument("--n-dirs", type=int, default=16)
            p.add_argument("--index", type=int, default=0)
            p.add_argument("--detector", choices=list(DETECTORS) + ["all"], default="all")
        p.set_defaults(func=fn)

    p = sub.add_parser("radii", help="cut-locus radii report (CSV)")
    _common(p, schedule=True)
    p.add_argument("--point", action="append", help="named point or coordinates (repeatable)")
    p.add_argument("--global", dest="global_", action="store_true", help="infimum over a sample net")
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--n-dirs", type=int, default=16)
    p.add_argument("--n-random", type=int, default=2)
    p.add_argument("--no-ult-conj", action="store_true")
    p.set_defaults(func=cmd_radii)

    p = sub.add_parser("klingenberg", help="ultimate pair or closed geodesic at MinRad")
    _common(p, schedule=True)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--n-dirs", type=int, default=16)
    p.add_argument("--n-random", type=int, default=2)
    p.set_defaults(func=cmd_klingenberg)

    p = sub.add_parser("rauch", help="bridge and comparison audits")
    _common(p, schedule=True)
    p.add_argument("--mode", choices=("bridges", "meridian", "triangles", "angles", "conjugate"),
                   default="bridges")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--count", dest="n_count", type=int, default=50)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--heights", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_rauch)

    p = sub.add_parser("fan", help="fans along polylines")
    _common(p)
    p.add_argument("--polyline", help="points separated by ';'")
    p.add_argument("--random", type=int, default=1, help="random polylines when --polyline is absent")
    p.add_argument("--ult-bound", type=float, default=None)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_fan)

    p = sub.add_parser("homotopy", help="long-homotopy audit on a named fixture")
    p.add_argument("--fixture", choices=HOMOTOPY_FIXTURES, default="equator-rotate")
    p.add_argument("--ult-bound", type=float, default=math.pi)
    p.add_argument("--S", type=int, default=32)
    p.add_argument("--T", type=int, default=16)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_homotopy)

    p = sub.add_parser("ab-constants", help="check the T0 constraints of the family extension")
    p.add_argument("--T0", type=float, default=0.1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ab)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    try:
        if extra and args.command in ("homotopy", "ab-constants"):
            raise InputError(f"unrecognized arguments: {' '.join(extra)}")
        return args.func(args, extra)
    except (SpaceFileError, InputError, KeyError, ValueError, BridgeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"lengthlab: error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
