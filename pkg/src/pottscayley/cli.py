"""Command-line interface: ``pottscayley <command> [options]``.

Exit codes: 0 success, 2 invalid arguments, 3 no result where one was
required (non-convergence, out of regime, no transition), 4 failed
verification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

from . import enumeration, fixed_points as fp, phase, recursion
from .model import BoundarySpec, ModelParams, ParameterRangeError, ThetaParams, params_from_thetas, thetas_from
from .tree import ResourceLimitError, TripleDeltaVariant, build_tree, interaction_lists

SCHEMA = 1
CSV_COLUMNS = ("theta", "theta1", "theta2", "theta3", "total", "stable", "symmetric", "class")

EXIT_OK, EXIT_USAGE, EXIT_NO_RESULT, EXIT_VERIFY = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    phys = p.add_argument_group("physical parameters")
    for name in ("J", "J1", "J2", "h"):
        phys.add_argument(f"--{name}", type=float, dest=name)
    phys.add_argument("--beta", type=float)
    th = p.add_argument_group("theta parameters")
    for name in ("theta", "theta1", "theta2", "theta3"):
        th.add_argument(f"--{name}", type=float, dest=name)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--boundary", choices=("free", "1", "2", "3"), default="free")
    p.add_argument("--delta-variant", choices=("averaged", "strict"), default="averaged")
    p.add_argument("--tol", type=float, default=recursion.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=recursion.DEFAULT_MAX_ITER)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--long", action="store_true", help="allow depth-3 enumeration")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="pottscayley", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("tree-info", parents=[common], help="vertex and interaction counts")
    sub.add_parser("exact", parents=[common], help="partition functions by enumeration")
    sub.add_parser("recurse", parents=[common], help="partition-function recursion")
    it = sub.add_parser("iterate", parents=[common], help="iterate the ratio map")
    it.add_argument("--u0", type=float)
    it.add_argument("--v0", type=float)
    sub.add_parser("symmetric", parents=[common], help="symmetric-branch analysis")
    fx = sub.add_parser("fixpoints", parents=[common], help="all fixed points with stability")
    fx.add_argument("--cross-check", action="store_true",
                    help="also run the multi-start Newton solver and compare")
    sc = sub.add_parser("scan", parents=[common], help="classify a parameter grid")
    sc.add_argument("--axis", action="append", required=True, metavar="NAME=LO:HI:STEPS[:log]")
    fr = sub.add_parser("find-regime", parents=[common], help="search for a parameter point")
    fr.add_argument("--target", choices=[c.value for c in phase.PhaseClass],
                    default=phase.PhaseClass.FIVE_SOLUTION.value)
    fr.add_argument("--budget", type=int, default=4000)
    cb = sub.add_parser("critical-beta", parents=[common], help="bracket the critical beta")
    cb.add_argument("--beta-min", type=float, required=True)
    cb.add_argument("--beta-max", type=float, required=True)
    cb.add_argument("--width", type=float, default=1e-6)
    vf = sub.add_parser("verify", parents=[common], help="recursion vs enumeration")
    vf.add_argument("--draws", type=int, default=20)
    vf.add_argument("--misprinted-v", action="store_true",
                    help="debug: use the misprinted v-equation in the ratio map")
    return parser


def _physical_given(args) -> bool:
    return any(getattr(args, k) is not None for k in ("J", "J1", "J2", "h", "beta"))


def _theta_given(args) -> bool:
    return any(getattr(args, k) is not None for k in ("theta", "theta1", "theta2", "theta3"))


def model_params(args) -> ModelParams:
    if _physical_given(args) and _theta_given(args):
        raise UsageError("give either physical (--J ...) or theta (--theta ...) parameters, not both")
    if _theta_given(args):
        return params_from_thetas(theta_params(args))
    return ModelParams(args.J or 0.0, args.J1 or 0.0, args.J2 or 0.0, args.h or 0.0,
                       1.0 if args.beta is None else args.beta)


def theta_params(args) -> ThetaParams:
    if _physical_given(args) and _theta_given(args):
        raise UsageError("give either physical (--J ...) or theta (--theta ...) parameters, not both")
    if _theta_given(args):
        return ThetaParams(*(1.0 if getattr(args, k) is None else getattr(args, k)
                             for k in ("theta", "theta1", "theta2", "theta3")))
    return thetas_from(model_params(args))


def _thetas_json(th: ThetaParams) -> dict:
    return {"theta": th.theta, "theta1": th.theta1, "theta2": th.theta2,
            "theta3": th.theta3, "theta_tilde": th.theta_tilde}


def _fixed_point_json(p: fp.FixedPoint) -> dict:
    return {"u": p.point.u, "v": p.point.v, "branch": p.branch.value,
            "residual": p.residual, "spectral_radius": p.spectral_radius,
            "stability": p.stability.value}


def _variant(args) -> TripleDeltaVariant:
    return TripleDeltaVariant(args.delta_variant)


def cmd_tree_info(args):
    tree = build_tree(args.depth)
    lists = interaction_lists(tree)
    return {"n": tree.depth, "vertices": tree.n_vertices,
            "level_sizes": [len(tree.level_vertices(m)) for m in range(tree.depth + 1)],
            "nn_edges": len(lists.nn_edges), "second_pairs": len(lists.second_pairs),
            "triples": len(lists.triples)}


def cmd_exact(args):
    params = model_params(args)
    start = time.perf_counter()
    pv = enumeration.exact_partition_vector(
        args.depth, params, BoundarySpec.parse(args.boundary), _variant(args),
        allow_long=args.long, jobs=args.jobs)
    # timing goes to stderr so stdout stays byte-identical between runs
    print(f"exact: {(time.perf_counter() - start) * 1000:.1f} ms", file=sys.stderr)
    return {"n": args.depth, "boundary": args.boundary, "variant": args.delta_variant,
            "logZ": list(pv.as_array()), "marginal": list(pv.marginal())}


def cmd_recurse(args):
    th = theta_params(args)
    boundary = BoundarySpec.parse(args.boundary)
    pv = recursion.base_partition(boundary, th, _variant(args))
    steps = []
    for k in range(args.depth + 1):
        if k:
            pv = recursion.step_partition(pv, th, _variant(args))
        u, v = pv.ratios()
        steps.append({"n": k, "logZ": list(pv.as_array()), "u": u, "v": v})
    return {"boundary": args.boundary, "variant": args.delta_variant,
            "thetas": _thetas_json(th), "steps": steps}


def cmd_iterate(args):
    th = theta_params(args)
    if args.u0 is not None or args.v0 is not None:
        if args.u0 is None or args.v0 is None:
            raise UsageError("--u0 and --v0 go together")
        start = recursion.RatioPoint(args.u0, args.v0)
    elif args.boundary != "free":
        start = recursion.boundary_seed(int(args.boundary), th)
    else:
        start = recursion.RatioPoint(*recursion.base_partition(BoundarySpec(), th).ratios())
    res = recursion.iterate(start, th, args.tol, args.max_iter)
    out = {"thetas": _thetas_json(th), "start": [start.u, start.v],
           "u": res.point.u, "v": res.point.v, "iterations": res.iterations,
           "residual": res.residual, "converged": res.converged,
           "cycle_period": res.cycle_period}
    return out, (EXIT_OK if res.converged else EXIT_NO_RESULT)


def cmd_symmetric(args):
    th = theta_params(args)
    a = fp.symmetric_analysis(th)
    A, B, C, D, E = a.quartic
    return {"thetas": _thetas_json(th), "theta1_star": a.theta1_star,
            "theta1_star_star": a.theta1_star_star, "inflection_u": a.inflection_u,
            "quartic": {"A": A, "B": B, "C": C, "D": D, "E": E},
            "tangency_roots": list(a.tangency_roots), "eta1": a.eta1, "eta2": a.eta2,
            "roots": list(a.roots), "root_count": a.root_count}


def cmd_fixpoints(args):
    th = theta_params(args)
    fps = fp.all_fixed_points(th)
    out = {"thetas": _thetas_json(th), "count": len(fps),
           "stable": len(fps.stable), "asymmetric_note": fps.asymmetric_note,
           "fixed_points": [_fixed_point_json(p) for p in fps]}
    if args.cross_check:
        newton = fp.newton_fixed_points(th)
        mine = [p.point.as_tuple() for p in fps]
        agree = len(newton) == len(mine) and all(
            any(fp._close(a, b) for b in newton) for a in mine)
        out["newton_points"] = [list(p) for p in newton]
        out["cross_check_agrees"] = agree
    return out


def _progress(done, total):
    if done == total or done % max(1, total // 20) == 0:
        print(f"scan: {done}/{total}", file=sys.stderr)


def cmd_scan(args):
    try:
        axes = [phase.Axis.parse(a) for a in args.axis]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    names = {a.name for a in axes}
    if names <= set(phase.THETA_AXES):
        th = theta_params(args)
        base = {"theta": th.theta, "theta1": th.theta1, "theta2": th.theta2, "theta3": th.theta3}
    else:
        p = model_params(args)
        base = {"J": p.J, "J1": p.J1, "J2": p.J2, "h": p.h, "beta": p.beta}
    try:
        points = list(phase.scan(axes, base, jobs=args.jobs, progress=_progress))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = [(p.thetas.theta, p.thetas.theta1, p.thetas.theta2, p.thetas.theta3,
             p.total_solutions, p.stable_solutions, p.symmetric_count, p.classification.value)
            for p in points]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows([[repr(x) if isinstance(x, float) else x for x in r] for r in rows])
        return buf.getvalue()
    return {"axes": [a.__dict__ for a in axes], "points": [dict(zip(CSV_COLUMNS, r)) for r in rows]}


def cmd_find_regime(args):
    target = phase.PhaseClass(args.target)
    th = phase.find_regime(target, args.budget)
    if th is None:
        return {"target": target.value, "found": False}
    pp = phase.classify(th)
    return {"target": target.value, "found": True, "thetas": _thetas_json(th),
            "params_beta1": params_from_thetas(th).__dict__,
            "total": pp.total_solutions, "stable": pp.stable_solutions,
            "symmetric": pp.symmetric_count}


def cmd_critical_beta(args):
    p = model_params(args)
    try:
        br = phase.critical_beta_bracket(p.J, p.J1, p.J2, p.h, (args.beta_min, args.beta_max),
                                         args.width)
    except phase.NoTransitionError as exc:
        return {"error": str(exc)}, EXIT_NO_RESULT
    return {"beta_low": br.beta_low, "beta_high": br.beta_high, "count_low": br.count_low,
            "count_high": br.count_high, "bisections": br.bisections}


def cmd_verify(args):
    if not args.long and args.depth > enumeration.DEFAULT_ENUM_DEPTH:
        raise UsageError("depth 3 needs --long")
    rep = phase.verify(args.depth, args.draws, args.seed, misprinted_v=args.misprinted_v)
    return rep, (EXIT_OK if rep["passed"] else EXIT_VERIFY)


COMMANDS = {
    "tree-info": cmd_tree_info, "exact": cmd_exact, "recurse": cmd_recurse,
    "iterate": cmd_iterate, "symmetric": cmd_symmetric, "fixpoints": cmd_fixpoints,
    "scan": cmd_scan, "find-regime": cmd_find_regime, "critical-beta": cmd_critical_beta,
    "verify": cmd_verify,
}


def _finite_or_none(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _finite_or_none(obj.item())
    return obj


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except (UsageError, ParameterRangeError, ResourceLimitError, ValueError) as exc:
        if isinstance(exc, fp.RegimeError):
            print(json.dumps({"schema": SCHEMA, "error": str(exc)}))
            return EXIT_NO_RESULT
        print(f"pottscayley: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code = EXIT_OK
    if isinstance(result, tuple):
        result, code = result
    if isinstance(result, str):
        sys.stdout.write(result)
    else:
        payload = {"schema": SCHEMA, "command": args.command}
        payload.update(_finite_or_none(result))
        print(json.dumps(payload, indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
