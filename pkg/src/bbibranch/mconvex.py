"""Discrete convexity layer: b-branching value oracles, exchange machinery,
and the submodular-flow style solver for the shortest b-bibranching.

f(x) is the cheapest b-branching whose indegree vector is exactly b - x;
g(x) relaxes the equality to >= and reduces to f by clipping x at b.  Both
are evaluated through weighted matroid intersection and memoized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .bibranching import Instance, Solution, bibranching_report, feasibility_witness, subgraph
from .digraph import Digraph, check_capacities
from .errors import InfeasibleInstance, InputError, TheoremViolation
from .matroids import (SparsityMatroid, is_b_branching,
                       min_weight_b_branching_exact_indegrees)
from .rationals import Q, ZERO


class BBranchingOracle:
    """Memoized evaluator for f and g over one digraph with weights."""

    def __init__(self, digraph: Digraph, b: dict[str, int], weights):
        self.digraph = digraph
        self.b = check_capacities(digraph, b)
        self.weights = [Q(weights[a]) for a in range(digraph.num_arcs())]
        self._memo_f: dict[tuple, Optional[tuple]] = {}

    def _key(self, x: dict[str, int]) -> tuple:
        return tuple(x.get(v, 0) for v in self.digraph.vertices)

    def eval_f_witness(self, x: dict[str, int]):
        """(value, witness arc set) for f(x), or None when f(x) = +infinity."""
        key = self._key(x)
        if key in self._memo_f:
            return self._memo_f[key]
        result = None
        if all(c >= 0 for c in key) and all(x.get(v, 0) <= self.b[v]
                                            for v in self.digraph.vertices):
            t = {v: self.b[v] - x.get(v, 0) for v in self.digraph.vertices}
            B = min_weight_b_branching_exact_indegrees(self.digraph, self.b,
                                                       self.weights, t)
            if B is not None:
                result = (sum((self.weights[a] for a in B), ZERO), B)
        self._memo_f[key] = result
        return result

    def eval_f(self, x: dict[str, int]):
        """f(x) as a rational, or None encoding +infinity."""
        result = self.eval_f_witness(x)
        return None if result is None else result[0]

    def eval_g_witness(self, x: dict[str, int]):
        """g(x) via the clipping identity g(x) = f(x wedge b)."""
        if any(x.get(v, 0) < 0 for v in self.digraph.vertices):
            return None
        clipped = {v: min(x.get(v, 0), self.b[v]) for v in self.digraph.vertices}
        return self.eval_f_witness(clipped)

    def eval_g(self, x: dict[str, int]):
        result = self.eval_g_witness(x)
        return None if result is None else result[0]


def eval_f(oracle: BBranchingOracle, x: dict[str, int]):
    return oracle.eval_f(x)


def eval_g(oracle: BBranchingOracle, x: dict[str, int]):
    return oracle.eval_g(x)


def check_mnat_exchange(evaluator: Callable[[dict], object],
                        vertices: Iterable[str],
                        x: dict[str, int], y: dict[str, int]):
    """Assert the exchange inequality for every u in supp+(x - y).

    Returns (True, None) on pass, else (False, (x, y, u)) as a
    theorem-violation report.  Both x and y must have finite values.
    """
    vertices = list(vertices)
    fx = evaluator(x)
    fy = evaluator(y)
    if fx is None or fy is None:
        raise InputError("exchange check requires points in the effective domain")
    lhs = fx + fy
    supp_pos = [v for v in vertices if x.get(v, 0) - y.get(v, 0) > 0]
    supp_neg = [v for v in vertices if x.get(v, 0) - y.get(v, 0) < 0]
    for u in supp_pos:
        x_down = dict(x)
        x_down[u] = x.get(u, 0) - 1
        y_up = dict(y)
        y_up[u] = y.get(u, 0) + 1
        f1 = evaluator(x_down)
        f2 = evaluator(y_up)
        if f1 is not None and f2 is not None and lhs >= f1 + f2:
            continue
        ok = False
        for v in supp_neg:
            xd = dict(x_down)
            xd[v] = xd.get(v, 0) + 1
            yu = dict(y_up)
            yu[v] = yu.get(v, 0) - 1
            f3 = evaluator(xd)
            f4 = evaluator(yu)
            if f3 is not None and f4 is not None and lhs >= f3 + f4:
                ok = True
                break
        if not ok:
            return False, (dict(x), dict(y), u)
    return True, None


# ---------------------------------------------------------------------------
# Two-partition and exchange lemmas
# ---------------------------------------------------------------------------

def _partition_with_degrees(digraph: Digraph, b: dict[str, int],
                            free_arcs: list[int], shared: frozenset[int],
                            targets1: dict[str, int], targets2: dict[str, int]):
    """Split free_arcs into two classes (both also containing shared) so that
    each class is a b-branching with the exact prescribed indegree vector.

    Deterministic backtracking over arcs in index order with degree and
    sparsity pruning; returns (B1, B2) or None.
    """
    sparsity = SparsityMatroid(digraph, b)
    order = sorted(free_arcs)
    remaining_in: dict[str, int] = {v: 0 for v in digraph.vertices}
    for a in order:
        remaining_in[digraph.head(a)] += 1

    deg1 = {v: 0 for v in digraph.vertices}
    deg2 = {v: 0 for v in digraph.vertices}
    for a in shared:
        deg1[digraph.head(a)] += 1
        deg2[digraph.head(a)] += 1
    class1: set[int] = set(shared)
    class2: set[int] = set(shared)

    def feasible_remaining() -> bool:
        for v in digraph.vertices:
            need = (targets1[v] - deg1[v]) + (targets2[v] - deg2[v])
            if targets1[v] < deg1[v] or targets2[v] < deg2[v]:
                return False
            if need > remaining_in[v]:
                return False
        return True

    def rec(i: int):
        if not feasible_remaining():
            return None
        if i == len(order):
            if all(deg1[v] == targets1[v] and deg2[v] == targets2[v]
                   for v in digraph.vertices):
                return frozenset(class1), frozenset(class2)
            return None
        a = order[i]
        head = digraph.head(a)
        remaining_in[head] -= 1
        for deg, cls, targets in ((deg1, class1, targets1), (deg2, class2, targets2)):
            if deg[head] < targets[head]:
                cls.add(a)
                deg[head] += 1
                if sparsity.independent(cls):
                    found = rec(i + 1)
                    if found is not None:
                        return found
                deg[head] -= 1
                cls.discard(a)
        remaining_in[head] += 1
        return None

    return rec(0)


def _find_any_two_partition(digraph: Digraph, b: dict[str, int]):
    """Some partition of all arcs into two b-branchings, or None."""
    sparsity = SparsityMatroid(digraph, b)
    caps = check_capacities(digraph, b)
    deg1 = {v: 0 for v in digraph.vertices}
    deg2 = {v: 0 for v in digraph.vertices}
    class1: set[int] = set()
    class2: set[int] = set()

    def rec(i: int):
        if i == digraph.num_arcs():
            return frozenset(class1), frozenset(class2)
        head = digraph.head(i)
        for deg, cls in ((deg1, class1), (deg2, class2)):
            if deg[head] < caps[head]:
                cls.add(i)
                deg[head] += 1
                if sparsity.independent(cls):
                    found = rec(i + 1)
                    if found is not None:
                        return found
                deg[head] -= 1
                cls.discard(i)
        return None

    return rec(0)


def two_partition(digraph: Digraph, b: dict[str, int],
                  b1: dict[str, int], b2: dict[str, int]):
    """Partition all arcs into two b-branchings with exact indegrees b1, b2.

    Returns (B1, B2) when the source-component condition holds, otherwise
    (None, witness X).  Requires that some partition into two b-branchings
    exists at all (lemma hypothesis).
    """
    b = check_capacities(digraph, b)
    if _find_any_two_partition(digraph, b) is None:
        raise InputError("arc set cannot be partitioned into two b-branchings")
    for v in digraph.vertices:
        if b1.get(v, 0) + b2.get(v, 0) != len(digraph.in_arcs(v)):
            raise InputError("b1 + b2 must equal the indegree vector of A")
        if b1.get(v, 0) > b[v] or b2.get(v, 0) > b[v]:
            raise InputError("prescriptions must be bounded by b")
        if b1.get(v, 0) < 0 or b2.get(v, 0) < 0:
            raise InputError("prescriptions must be nonnegative")

    for comp, is_source in digraph.strong_components():
        if not is_source:
            continue
        bX = sum(b[v] for v in comp)
        if sum(b1.get(v, 0) for v in comp) >= bX or sum(b2.get(v, 0) for v in comp) >= bX:
            return None, comp

    t1 = {v: b1.get(v, 0) for v in digraph.vertices}
    t2 = {v: b2.get(v, 0) for v in digraph.vertices}
    found = _partition_with_degrees(digraph, b, list(range(digraph.num_arcs())),
                                    frozenset(), t1, t2)
    if found is None:
        raise TheoremViolation("two-partition condition held but no partition found",
                               payload={"b1": b1, "b2": b2})
    return found


def exchange_b_branchings(digraph: Digraph, b: dict[str, int],
                          B1: Iterable[int], B2: Iterable[int], s: str):
    """Shift one unit of indegree at s from B2 to B1 preserving union/intersection.

    Returns (B1', B2', case) with case 'a' (plain chi_s shift) or 'b'
    (compensated at some vertex t), following the lemma's case split on the
    strong component of s in the multigraph union.
    """
    b = check_capacities(digraph, b)
    B1 = digraph.check_arcset(B1)
    B2 = digraph.check_arcset(B2)
    if not is_b_branching(digraph, b, B1) or not is_b_branching(digraph, b, B2):
        raise InputError("B1 and B2 must be b-branchings")
    d1 = {v: digraph.in_degree(B1, v) for v in digraph.vertices}
    d2 = {v: digraph.in_degree(B2, v) for v in digraph.vertices}
    if not d1[s] < d2[s]:
        raise InputError("hypothesis requires d_B1^-(s) < d_B2^-(s)")

    # Multigraph union: shared arcs duplicated as parallel arcs.
    union = sorted(B1 | B2)
    shared = B1 & B2
    multi_arcs = [digraph.arcs[a] for a in union] + [digraph.arcs[a] for a in sorted(shared)]
    multi = Digraph(digraph.vertices, multi_arcs)

    case = "a"
    t_vertex = None
    for comp, is_source in multi.strong_components():
        if s not in comp or not is_source:
            continue
        if sum(d1[v] for v in comp) == sum(b[v] for v in comp) - 1:
            candidates = sorted(v for v in comp if v != s and d2[v] < b[v])
            if not candidates:
                raise TheoremViolation("exchange lemma case (b) vertex t missing")
            t_vertex = candidates[0]
            case = "b"
        break

    b1p = dict(d1)
    b2p = dict(d2)
    b1p[s] += 1
    b2p[s] -= 1
    if case == "b":
        b1p[t_vertex] -= 1
        b2p[t_vertex] += 1

    found = _partition_with_degrees(digraph, b, sorted(B1 ^ B2), frozenset(shared),
                                    b1p, b2p)
    if found is None:
        raise TheoremViolation("exchange lemma produced no valid reassignment",
                               payload={"case": case, "s": s, "t": t_vertex})
    B1p, B2p = found
    assert B1p | B2p == B1 | B2 and B1p & B2p == shared
    return B1p, B2p, case


# ---------------------------------------------------------------------------
# Submodular-flow style solver
# ---------------------------------------------------------------------------

def t_side_oracle(instance: Instance) -> tuple[BBranchingOracle, list[int]]:
    d_T, arc_map = subgraph(instance.digraph, instance.T)
    b_T = {v: instance.b[v] for v in instance.T}
    w_T = [instance.weights[a] for a in arc_map]
    return BBranchingOracle(d_T, b_T, w_T), arc_map


def s_side_oracle(instance: Instance) -> tuple[BBranchingOracle, list[int]]:
    # Cobranchings: evaluate on the reversed induced subgraph.
    d_S, arc_map = subgraph(instance.digraph, instance.S, reverse=True)
    b_S = {u: instance.b[u] for u in instance.S}
    w_S = [instance.weights[a] for a in arc_map]
    return BBranchingOracle(d_S, b_S, w_S), arc_map


# Extra exchange-graph node for pure single-coordinate moves; a dedicated
# object so it can never collide with a vertex id.
_NULL = object()


@dataclass
class _AuxArc:
    tail: object
    head: object
    cost: object
    flip: Optional[int]  # cross-arc index to toggle, None for oracle arcs


def solve_mflow(instance: Instance) -> Solution:
    """Shortest b-bibranching by negative-cycle canceling over cross-arc flows.

    The flow variable lives on the S-to-T arcs; the two side oracles supply
    the cost of completing a boundary vector into branchings/cobranchings.
    Cancellation picks a negative cycle with the fewest arcs.
    """
    failure = feasibility_witness(instance)
    if failure is not None:
        raise InfeasibleInstance("no b-bibranching exists", witness=failure)

    D = instance.digraph
    H = sorted(instance.cross_arcs())
    oracle_T, map_T = t_side_oracle(instance)
    oracle_S, map_S = s_side_oracle(instance)
    xi = {a: 1 for a in H}

    def boundaries():
        z_S = {u: 0 for u in instance.S}
        z_T = {v: 0 for v in instance.T}
        for a in H:
            if xi[a]:
                z_S[D.tail(a)] += 1
                z_T[D.head(a)] += 1
        return z_S, z_T

    def g_S(z):
        return oracle_S.eval_g(z)

    def g_T(z):
        return oracle_T.eval_g(z)

    def shifted(z, deltas):
        out = dict(z)
        for v, d in deltas:
            out[v] = out.get(v, 0) + d
        return out

    def build_arcs(z_S, z_T):
        gS0 = g_S(z_S)
        gT0 = g_T(z_T)
        arcs: list[_AuxArc] = []
        for a in H:
            u, v = D.arcs[a]
            if xi[a]:
                arcs.append(_AuxArc(v, u, -instance.weights[a], a))
            else:
                arcs.append(_AuxArc(u, v, instance.weights[a], a))

        def delta_S(deltas):
            val = g_S(shifted(z_S, deltas))
            return None if val is None else val - gS0

        def delta_T(deltas):
            val = g_T(shifted(z_T, deltas))
            return None if val is None else val - gT0

        nodes = sorted(instance.S) + sorted(instance.T) + [_NULL]

        def side_delta(p, q):
            # Boundary change of moving one unit from p to q (z - chi_p + chi_q
            # in the flow-boundary coordinates where T counts are negated).
            dS, dT = [], []
            for node, sign in ((p, -1), (q, +1)):
                if node is _NULL:
                    continue
                if node in instance.S:
                    dS.append((node, sign))
                else:
                    dT.append((node, -sign))
            cS = delta_S(dS) if dS else ZERO
            cT = delta_T(dT) if dT else ZERO
            if cS is None or cT is None:
                return None
            return cS + cT

        for p in nodes:
            for q in nodes:
                if p == q:
                    continue
                cost = side_delta(p, q)
                if cost is not None:
                    arcs.append(_AuxArc(p, q, cost, None))
        return nodes, arcs

    while True:
        z_S, z_T = boundaries()
        nodes, arcs = build_arcs(z_S, z_T)
        cycle = _min_arc_negative_cycle(nodes, arcs)
        if cycle is None:
            break
        for arc in cycle:
            if arc.flip is not None:
                xi[arc.flip] ^= 1

    z_S, z_T = boundaries()
    val_T = oracle_T.eval_g_witness(z_T)
    val_S = oracle_S.eval_g_witness(z_S)
    assert val_T is not None and val_S is not None
    support = frozenset(a for a in H if xi[a])
    arcs_out = (support
                | frozenset(map_T[i] for i in val_T[1])
                | frozenset(map_S[i] for i in val_S[1]))
    weight = sum((instance.weights[a] for a in support), ZERO) + val_T[0] + val_S[0]
    solution = Solution(arcs_out, weight, bibranching_report(instance, arcs_out))
    if not all(entry["ok"] for entry in solution.certificate.values()):
        raise TheoremViolation("submodular-flow output is not a b-bibranching")
    return solution


def _min_arc_negative_cycle(nodes, arcs):
    """A negative cycle with the fewest arcs, deterministically chosen."""
    order = {node: i for i, node in enumerate(nodes)}
    out_arcs: dict = {node: [] for node in nodes}
    for arc in sorted(arcs, key=lambda t: (order[t.tail], order[t.head],
                                           t.flip if t.flip is not None else -1)):
        out_arcs[arc.tail].append(arc)

    n = len(nodes)
    for length in range(2, n + 1):
        best = None
        for start in nodes:
            # dist[v] = best (cost, trace) for walks start -> v of exact length.
            dist = {start: (ZERO, ())}
            for _ in range(length):
                nxt: dict = {}
                for u, (cost, trace) in dist.items():
                    for arc in out_arcs[u]:
                        cand = (cost + arc.cost, trace + (arc,))
                        key = arc.head
                        if key not in nxt or cand[0] < nxt[key][0]:
                            nxt[key] = cand
                dist = nxt
            if start in dist and dist[start][0] < 0:
                cand = (dist[start][0], order[start], dist[start][1])
                if best is None or cand[:2] < best[:2]:
                    best = cand
        if best is not None:
            return list(best[2])
    return None
