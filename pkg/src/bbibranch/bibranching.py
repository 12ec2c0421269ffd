"""The b-bibranching object: validation, pruning, brute force, solver front end.

The four-condition definition (reachability both ways plus the two degree
bounds) is authoritative.  The branching/cobranching description is kept as a
separate checker; it implies the four conditions but may reject non-minimal
sets that the four conditions accept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .digraph import Bipartition, Digraph, check_capacities
from .errors import GuardError, InfeasibleInstance, InputError
from .matroids import is_b_branching
from .rationals import Q, ZERO, rat

BRUTE_FORCE_ARC_LIMIT = 20
CROSS_CHECK_ARC_LIMIT = 16


class Instance:
    """A digraph with an {S,T} bipartition, capacities b and arc weights w."""

    def __init__(self, digraph: Digraph, side: dict[str, str],
                 b: dict[str, int], weights):
        self.digraph = digraph
        self.bipartition = Bipartition(digraph, side)
        self.b = check_capacities(digraph, b)
        self.weights = [rat(weights[a]) for a in range(digraph.num_arcs())]
        for a, w in enumerate(self.weights):
            if w < 0:
                raise InputError("arc %d has negative weight" % a)

    @property
    def S(self) -> frozenset[str]:
        return self.bipartition.S

    @property
    def T(self) -> frozenset[str]:
        return self.bipartition.T

    def weight_of(self, B: Iterable[int]):
        return sum((self.weights[a] for a in B), ZERO)

    def cross_arcs(self) -> frozenset[int]:
        """H = A[S,T], the arcs from the S side to the T side."""
        return self.digraph.arcs_between(self.digraph.all_arcs, self.S, self.T)


@dataclass
class Solution:
    arcs: frozenset[int]
    weight: object
    certificate: dict = field(default_factory=dict)


def bibranching_report(instance: Instance, B: Iterable[int]) -> dict:
    """Per-condition verdicts; each failed condition names a witness vertex."""
    D = instance.digraph
    B = D.check_arcset(B)
    reached = D.reachable_from(B, instance.S)
    report: dict[str, dict] = {}

    missing_t = sorted(v for v in instance.T if v not in reached)
    report["t_reachable_from_s"] = {"ok": not missing_t,
                                    "witness": missing_t[0] if missing_t else None}
    stuck_s = sorted(u for u in instance.S
                     if not (D.reachable_from(B, {u}) & instance.T))
    report["s_reaches_t"] = {"ok": not stuck_s,
                             "witness": stuck_s[0] if stuck_s else None}
    low_in = sorted(v for v in instance.T if D.in_degree(B, v) < instance.b[v])
    report["t_indegree"] = {"ok": not low_in,
                            "witness": low_in[0] if low_in else None}
    low_out = sorted(u for u in instance.S if D.out_degree(B, u) < instance.b[u])
    report["s_outdegree"] = {"ok": not low_out,
                             "witness": low_out[0] if low_out else None}
    return report


def is_b_bibranching(instance: Instance, B: Iterable[int]) -> bool:
    return all(entry["ok"] for entry in bibranching_report(instance, B).values())


def subgraph(digraph: Digraph, X: Iterable[str], reverse: bool = False):
    """Induced subdigraph on X; returns (digraph, map to original arc indices)."""
    X = digraph.check_vertices(X)
    vertices = [v for v in digraph.vertices if v in X]
    arc_map = sorted(digraph.induced_arcs(digraph.all_arcs, X))
    arcs = []
    for a in arc_map:
        tail, head = digraph.arcs[a]
        arcs.append((head, tail) if reverse else (tail, head))
    return Digraph(vertices, arcs), arc_map


def check_alternative_description(instance: Instance, B: Iterable[int]) -> bool:
    """B[T] a b|T-branching, B[S] a b|S-cobranching, plus the degree bounds."""
    D = instance.digraph
    B = D.check_arcset(B)
    for v in instance.T:
        if D.in_degree(B, v) < instance.b[v]:
            return False
    for u in instance.S:
        if D.out_degree(B, u) < instance.b[u]:
            return False

    d_T, map_T = subgraph(D, instance.T)
    b_T = {v: instance.b[v] for v in instance.T}
    B_T = frozenset(i for i, a in enumerate(map_T) if a in B)
    if not is_b_branching(d_T, b_T, B_T):
        return False

    # The S side is checked on the reversed induced subgraph: a b-cobranching
    # is an arc set whose reversal is a b-branching.
    d_S, map_S = subgraph(D, instance.S, reverse=True)
    b_S = {u: instance.b[u] for u in instance.S}
    B_S = frozenset(i for i, a in enumerate(map_S) if a in B)
    return is_b_branching(d_S, b_S, B_S)


def prune_to_minimal(instance: Instance, B: Iterable[int]) -> frozenset[int]:
    """Shrink B to an inclusion-wise minimal b-bibranching.

    Deterministic: the highest-weight removable arc goes first, ties broken
    by the lower arc index.  Weight-0 arcs are removable too.
    """
    B = instance.digraph.check_arcset(B)
    if not is_b_bibranching(instance, B):
        raise InputError("prune_to_minimal requires a valid b-bibranching")
    current = set(B)
    while True:
        removable = [a for a in current if is_b_bibranching(instance, current - {a})]
        if not removable:
            return frozenset(current)
        removable.sort(key=lambda a: (-instance.weights[a], a))
        current.discard(removable[0])


class _FastChecker:
    """Bitmask b-bibranching validity test for subset enumeration."""

    def __init__(self, instance: Instance):
        D = instance.digraph
        self.n = len(D.vertices)
        vidx = {v: i for i, v in enumerate(D.vertices)}
        self.arc_ends = [(vidx[t], vidx[h]) for (t, h) in D.arcs]
        self.in_mask = [0] * self.n
        self.out_mask = [0] * self.n
        for a, (t, h) in enumerate(self.arc_ends):
            self.out_mask[t] |= 1 << a
            self.in_mask[h] |= 1 << a
        self.t_need = [(vidx[v], instance.b[v]) for v in sorted(instance.T)]
        self.s_need = [(vidx[u], instance.b[u]) for u in sorted(instance.S)]
        self.s_bits = 0
        for u in instance.S:
            self.s_bits |= 1 << vidx[u]
        self.t_bits = 0
        for v in instance.T:
            self.t_bits |= 1 << vidx[v]

    def valid(self, mask: int) -> bool:
        for v, need in self.t_need:
            if (mask & self.in_mask[v]).bit_count() < need:
                return False
        for u, need in self.s_need:
            if (mask & self.out_mask[u]).bit_count() < need:
                return False
        # Forward closure from S must cover T.
        reach = self.s_bits
        while True:
            grown = reach
            rest = mask
            while rest:
                a = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                t, h = self.arc_ends[a]
                if (grown >> t) & 1:
                    grown |= 1 << h
            if grown == reach:
                break
            reach = grown
        if (reach & self.t_bits) != self.t_bits:
            return False
        # Every S vertex must reach T: backward closure from T.
        co_reach = self.t_bits
        while True:
            grown = co_reach
            rest = mask
            while rest:
                a = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                t, h = self.arc_ends[a]
                if (grown >> h) & 1:
                    grown |= 1 << t
            if grown == co_reach:
                break
            co_reach = grown
        return (co_reach & self.s_bits) == self.s_bits


def brute_force_shortest(instance: Instance,
                         arc_limit: int = BRUTE_FORCE_ARC_LIMIT) -> Optional[Solution]:
    """Exact optimum by enumerating all arc subsets; None when infeasible."""
    m = instance.digraph.num_arcs()
    if m > arc_limit:
        raise GuardError("brute force limited to %d arcs, got %d" % (arc_limit, m))
    checker = _FastChecker(instance)
    weights = instance.weights
    best_weight = None
    best_mask = None
    for mask in range(1 << m):
        if not checker.valid(mask):
            continue
        w = ZERO
        rest = mask
        while rest:
            a = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            w += weights[a]
        if best_weight is None or w < best_weight:
            best_weight = w
            best_mask = mask
    if best_mask is None:
        return None
    arcs = frozenset(a for a in range(m) if (best_mask >> a) & 1)
    return Solution(arcs, best_weight, bibranching_report(instance, arcs))


def feasibility_witness(instance: Instance) -> Optional[dict]:
    """None when feasible; otherwise the failing condition on the full arc set.

    By superset closure the instance is feasible iff the whole arc set A is a
    b-bibranching.
    """
    report = bibranching_report(instance, instance.digraph.all_arcs)
    for condition, entry in report.items():
        if not entry["ok"]:
            return {"condition": condition, "witness": entry["witness"]}
    return None


def solve_shortest(instance: Instance, method: str = "auto") -> Solution:
    """Optimal b-bibranching via the LP route, the submodular-flow route, or both."""
    if method not in ("lp", "mflow", "brute", "auto"):
        raise InputError("unknown method %r" % (method,))
    failure = feasibility_witness(instance)
    if failure is not None:
        raise InfeasibleInstance(
            "no b-bibranching exists: condition %s fails at %s"
            % (failure["condition"], failure["witness"]), witness=failure)

    from . import lpsolve, mconvex  # local import: those modules use Instance

    if method == "brute":
        solution = brute_force_shortest(instance)
    elif method == "mflow":
        solution = mconvex.solve_mflow(instance)
    else:
        solution = lpsolve.solve_primal_cutting_plane(instance).solution
        if method == "auto" and instance.digraph.num_arcs() <= CROSS_CHECK_ARC_LIMIT:
            other = mconvex.solve_mflow(instance)
            if other.weight != solution.weight:
                from .errors import TheoremViolation
                raise TheoremViolation(
                    "LP and submodular-flow optima disagree: %s vs %s"
                    % (solution.weight, other.weight))
            solution.certificate["cross_check"] = "mflow agrees"
    assert solution is not None
    return solution
