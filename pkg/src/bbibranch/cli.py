"""Command-line front end: instance files, solvers, checkers, generator.

Instance files are JSON documents::

    {"vertices": [{"id": "s", "side": "S", "b": 1}, ...],
     "arcs": [{"tail": "s", "head": "t", "weight": 5}, ...]}

Weights may be integers or exact rationals written as "p/q" strings.
Reports are JSON with rationals serialized the same way and arcs referenced
by their 0-based index in the instance file.

Exit codes: 0 success, 2 input error, 3 infeasible, 4 guard exceeded,
5 theorem-violation report.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys

from .bibranching import (Instance, bibranching_report, brute_force_shortest,
                          is_b_bibranching, solve_shortest)
from .digraph import Digraph
from .errors import GuardError, InfeasibleInstance, InputError, TheoremViolation
from .rationals import parse_rat, rat_str

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_GUARD = 4
EXIT_THEOREM = 5


# ---------------------------------------------------------------------------
# Instance (de)serialization
# ---------------------------------------------------------------------------

def load_instance_data(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise InputError("instance document must be a JSON object")
    for field in ("vertices", "arcs"):
        if not isinstance(data.get(field), list):
            raise InputError("instance field %r must be a list" % field)
    side = {}
    b = {}
    ids = []
    for i, entry in enumerate(data["vertices"]):
        if not isinstance(entry, dict) or "id" not in entry:
            raise InputError("vertices[%d] must be an object with an 'id'" % i)
        vid = entry["id"]
        if not isinstance(vid, str):
            raise InputError("vertices[%d].id must be a string" % i)
        ids.append(vid)
        side[vid] = entry.get("side")
        b[vid] = entry.get("b")
    arcs = []
    weights = []
    for i, entry in enumerate(data["arcs"]):
        if not isinstance(entry, dict):
            raise InputError("arcs[%d] must be an object" % i)
        weight = entry.get("weight", 0)
        if isinstance(weight, bool) or not isinstance(weight, (int, str)):
            raise InputError("arcs[%d].weight must be an integer or 'p/q' string" % i)
        try:
            weights.append(parse_rat(weight) if isinstance(weight, str)
                           else parse_rat(str(weight)))
        except ValueError:
            raise InputError("arcs[%d].weight is not a rational" % i)
        arcs.append((entry.get("tail"), entry.get("head")))
    digraph = Digraph(ids, arcs)
    return Instance(digraph, side, b, weights)


def serialize_instance(instance: Instance) -> dict:
    return {
        "vertices": [
            {"id": v, "side": "S" if v in instance.S else "T",
             "b": instance.b[v]}
            for v in instance.digraph.vertices],
        "arcs": [
            {"tail": t, "head": h, "weight": rat_str(instance.weights[i])}
            for i, (t, h) in enumerate(instance.digraph.arcs)],
    }


def load_instance_file(path: str) -> tuple[Instance, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError("cannot read instance file: %s" % exc)
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InputError("instance file is not valid JSON: %s" % exc)
    instance = load_instance_data(data)
    digest = hashlib.sha256(raw.encode("utf-8")).hexdigest()
    return instance, digest


def emit_report(args, payload: dict, instance_hash: str, status: str = "ok") -> None:
    report = {
        "command": [args.command] + getattr(args, "_echo", []),
        "instance_hash": instance_hash,
        "status": status,
        "result": payload,
    }
    json.dump(report, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    instance, digest = load_instance_file(args.instance)
    try:
        with open(args.solution, "r", encoding="utf-8") as fh:
            sol = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError("cannot read solution file: %s" % exc)
    if not isinstance(sol, dict) or not isinstance(sol.get("arcs"), list):
        raise InputError("solution file must contain an 'arcs' list")
    arcs = sol["arcs"]
    if not all(isinstance(a, int) for a in arcs):
        raise InputError("solution arcs must be integer indices")
    report = bibranching_report(instance, arcs)
    ok = all(entry["ok"] for entry in report.values())
    emit_report(args, {"conditions": report, "valid": ok}, digest)
    return EXIT_OK


def cmd_solve(args) -> int:
    instance, digest = load_instance_file(args.instance)
    solution = solve_shortest(instance, method=args.method)
    payload = {
        "arcs": sorted(solution.arcs),
        "value": rat_str(solution.weight),
        "method": args.method,
        "certificate": _jsonable(solution.certificate),
    }
    emit_report(args, payload, digest)
    return EXIT_OK


def cmd_packing_number(args) -> int:
    from .packing import packing_number

    instance, digest = load_instance_file(args.instance)
    witness = packing_number(instance)
    payload = {
        "k": witness.k,
        "t_min": witness.t_min, "t_argmin": witness.t_argmin,
        "s_min": witness.s_min, "s_argmin": witness.s_argmin,
        "bicut_min": witness.bicut_min,
        "bicut_witness": sorted(witness.bicut_witness),
    }
    emit_report(args, payload, digest)
    return EXIT_OK


def cmd_pack(args) -> int:
    from .packing import pack_b_bibranchings

    instance, digest = load_instance_file(args.instance)
    cert = pack_b_bibranchings(instance)
    payload = {
        "k": cert.k,
        "witness": {
            "t_min": cert.witness.t_min, "t_argmin": cert.witness.t_argmin,
            "s_min": cert.witness.s_min, "s_argmin": cert.witness.s_argmin,
            "bicut_min": cert.witness.bicut_min,
            "bicut_witness": sorted(cert.witness.bicut_witness),
        },
        "cross_classes": [sorted(c) for c in cert.cross_classes],
        "branchings": [sorted(c) for c in cert.branchings],
        "cobranchings": [sorted(c) for c in cert.cobranchings],
        "classes": [sorted(c) for c in cert.assembled],
        "hypothesis_violations": cert.hypothesis_violations,
    }
    emit_report(args, payload, digest)
    return EXIT_OK


def _check_tdi(instance, rng, trials):
    from .lpsolve import tdi_spot_check

    outcome = tdi_spot_check(instance)
    passed = bool(outcome["found"])
    dual = outcome.get("dual")
    detail = {
        "primal": rat_str(outcome["primal"]),
        "nodes": outcome["nodes"],
        "dual": None if dual is None else {
            "objective": rat_str(dual.objective),
            "y": {_dual_key_str(key): rat_str(val)
                  for key, val in sorted(dual.y.items(),
                                         key=lambda kv: _dual_key_str(kv[0]))
                  if val != 0},
        },
    }
    return passed, detail


def _dual_key_str(key) -> str:
    kind, body = key
    if kind == "v":
        return "v:%s" % body
    return "U:{%s}" % ",".join(sorted(body))


def _random_degree_vector(rng, vertices, b, spread=1):
    return {v: rng.randint(0, b[v] + spread) for v in vertices}


def _check_mconvex(instance, rng, trials):
    from .mconvex import BBranchingOracle, check_mnat_exchange

    oracle = BBranchingOracle(instance.digraph, instance.b, instance.weights)
    vertices = instance.digraph.vertices
    for kind, evaluator in (("f", oracle.eval_f), ("g", oracle.eval_g)):
        done = 0
        attempts = 0
        while done < trials and attempts < trials * 50:
            attempts += 1
            x = _random_degree_vector(rng, vertices, instance.b)
            y = _random_degree_vector(rng, vertices, instance.b)
            if evaluator(x) is None or evaluator(y) is None:
                continue
            ok, counterexample = check_mnat_exchange(evaluator, vertices, x, y)
            if not ok:
                return False, {"function": kind,
                               "counterexample": _jsonable(counterexample)}
            done += 1
        if done == 0:
            return True, {"note": "no domain points sampled for %s" % kind}
    return True, {"trials": trials}


def _random_b_branching(rng, digraph, b):
    from .matroids import PartitionMatroid, SparsityMatroid

    partition = PartitionMatroid(digraph, b)
    sparsity = SparsityMatroid(digraph, b)
    order = list(range(digraph.num_arcs()))
    rng.shuffle(order)
    current: set[int] = set()
    for a in order:
        if rng.random() < 0.6:
            candidate = current | {a}
            if partition.independent(candidate) and sparsity.independent(candidate):
                current.add(a)
    return frozenset(current)


def _check_exchange(instance, rng, trials):
    from .mconvex import exchange_b_branchings

    D = instance.digraph
    done = 0
    attempts = 0
    cases = {"a": 0, "b": 0}
    while done < trials and attempts < trials * 50:
        attempts += 1
        B1 = _random_b_branching(rng, D, instance.b)
        B2 = _random_b_branching(rng, D, instance.b)
        candidates = [v for v in D.vertices
                      if D.in_degree(B1, v) < D.in_degree(B2, v)]
        if not candidates:
            continue
        s = rng.choice(sorted(candidates))
        B1p, B2p, case = exchange_b_branchings(D, instance.b, B1, B2, s)
        cases[case] += 1
        d1 = {v: D.in_degree(B1, v) for v in D.vertices}
        d2 = {v: D.in_degree(B2, v) for v in D.vertices}
        d1p = {v: D.in_degree(B1p, v) for v in D.vertices}
        d2p = {v: D.in_degree(B2p, v) for v in D.vertices}
        d1[s] += 1
        d2[s] -= 1
        if case == "a":
            if d1p != d1 or d2p != d2:
                return False, {"stage": "degrees", "s": s}
        done += 1
    return True, {"trials": done, "cases": cases}


def _check_idp(instance, rng, trials):
    from .packing import integer_decomposition_check

    solution = solve_shortest(instance, method="lp")
    k = max(2, min(3, trials)) if trials else 2
    x = [k if a in solution.arcs else 0
         for a in range(instance.digraph.num_arcs())]
    classes = integer_decomposition_check(instance, k, x)
    return True, {"k": k, "classes": [sorted(c) for c in classes]}


def cmd_check(args) -> int:
    instance, digest = load_instance_file(args.instance)
    rng = random.Random(args.seed)
    checkers = {"tdi": _check_tdi, "mconvex": _check_mconvex,
                "exchange": _check_exchange, "idp": _check_idp}
    passed, detail = checkers[args.what](instance, rng, args.trials)
    emit_report(args, {"check": args.what, "passed": passed, "detail": detail},
                digest, status="ok" if passed else "failed")
    return EXIT_OK if passed else EXIT_THEOREM


def cmd_gen(args) -> int:
    if args.nS < 1 or args.nT < 1:
        raise InputError("nS and nT must be positive")
    if not (0.0 <= args.arc_density <= 1.0):
        raise InputError("arc density must lie in [0, 1]")
    if args.bmax < 1 or args.wmax < 0:
        raise InputError("bmax must be >= 1 and wmax >= 0")
    rng = random.Random(args.seed)
    s_ids = ["s%d" % i for i in range(args.nS)]
    t_ids = ["t%d" % i for i in range(args.nT)]
    vertices = [{"id": v, "side": "S", "b": rng.randint(1, args.bmax)}
                for v in s_ids]
    vertices += [{"id": v, "side": "T", "b": rng.randint(1, args.bmax)}
                 for v in t_ids]
    allowed = []
    for u in s_ids:
        allowed += [(u, v) for v in s_ids if v != u]
        allowed += [(u, v) for v in t_ids]
    for u in t_ids:
        allowed += [(u, v) for v in t_ids if v != u]
    arcs = []
    for tail, head in allowed:
        if rng.random() < args.arc_density:
            arcs.append({"tail": tail, "head": head,
                         "weight": rng.randint(0, args.wmax)})
    json.dump({"vertices": vertices, "arcs": arcs}, sys.stdout,
              sort_keys=True, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _jsonable(obj):
    """Recursively convert report payloads to JSON-safe structures."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, (frozenset, set)):
        return sorted(_jsonable(v) for v in obj)
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    return rat_str(obj)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbibranch",
        description="exact solvers and checkers for b-bibranchings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a solution file against an instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="shortest b-bibranching")
    p.add_argument("instance")
    p.add_argument("--method", choices=["lp", "mflow", "brute", "auto"],
                   default="auto")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("packing-number", help="exact disjoint-packing value")
    p.add_argument("instance")
    p.set_defaults(func=cmd_packing_number)

    p = sub.add_parser("pack", help="construct a maximum disjoint packing")
    p.add_argument("instance")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("check", help="property spot checks")
    p.add_argument("instance")
    p.add_argument("--what", choices=["tdi", "mconvex", "exchange", "idp"],
                   required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate a seeded random instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nS", type=int, required=True)
    p.add_argument("--nT", type=int, required=True)
    p.add_argument("--arc-density", type=float, default=0.5)
    p.add_argument("--bmax", type=int, default=1)
    p.add_argument("--wmax", type=int, default=9)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else 0
    args._echo = argv[1:]
    try:
        return args.func(args)
    except InputError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleInstance as exc:
        report = {"command": [args.command] + argv[1:],
                  "status": "infeasible",
                  "result": {"message": str(exc),
                             "witness": _jsonable(exc.witness)}}
        json.dump(report, sys.stdout, sort_keys=True, indent=2)
        sys.stdout.write("\n")
        return EXIT_INFEASIBLE
    except GuardError as exc:
        print("guard exceeded: %s" % exc, file=sys.stderr)
        return EXIT_GUARD
    except TheoremViolation as exc:
        print("theorem violation: %s" % exc, file=sys.stderr)
        return EXIT_THEOREM


if __name__ == "__main__":
    sys.exit(main())
