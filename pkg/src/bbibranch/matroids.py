"""The two matroids behind b-branchings and weighted matroid intersection.

A b-branching is a common independent set of an indegree partition matroid
and a sparsity (count) matroid, so the optimization variants here all reduce
to weighted matroid intersection on those two matroids.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .digraph import Digraph, InputError, check_capacities, max_flow_min_cut
from .rationals import Q, ZERO


class PartitionMatroid:
    """Independence: every vertex v has indegree at most cap(v) in B."""

    def __init__(self, digraph: Digraph, caps: dict[str, int]):
        self.digraph = digraph
        self.caps = dict(caps)
        for v in digraph.vertices:
            c = self.caps.get(v)
            if not isinstance(c, int) or c < 0:
                raise InputError("partition cap for %r must be a nonnegative integer" % (v,))

    def independent(self, B: Iterable[int]) -> bool:
        counts: dict[str, int] = {}
        for a in B:
            head = self.digraph.head(a)
            counts[head] = counts.get(head, 0) + 1
            if counts[head] > self.caps[head]:
                return False
        return True


class SparsityMatroid:
    """Independence: |B[X]| <= b(X) - 1 for every nonempty vertex set X.

    The violation test forces each vertex v into X in turn and maximizes
    |B[X]| - b(X) over X containing v with a project-selection min cut, so
    the empty set never masks a violation.
    """

    def __init__(self, digraph: Digraph, b: dict[str, int]):
        self.digraph = digraph
        self.b = check_capacities(digraph, b)
        self._memo: dict[frozenset[int], Optional[frozenset[str]]] = {}

    def violation_witness(self, B: Iterable[int]) -> Optional[frozenset[str]]:
        """A nonempty X minimizing b(X) - |B[X]| when that minimum is <= 0."""
        B = self.digraph.check_arcset(B)
        if B in self._memo:
            return self._memo[B]
        best_value = None
        best_X = None
        arcs_list = sorted(B)
        for v in self.digraph.vertices:
            nodes = ["src", "snk"]
            net_arcs = []
            for a in arcs_list:
                node = ("arc", a)
                nodes.append(node)
                net_arcs.append(("src", node, 1))
                for endpoint in self.digraph.arcs[a]:
                    if endpoint != v:
                        net_arcs.append((node, ("vtx", endpoint), None))
            for u in self.digraph.vertices:
                if u != v:
                    nodes.append(("vtx", u))
                    net_arcs.append((("vtx", u), "snk", self.b[u]))
            flow, cut = max_flow_min_cut(nodes, net_arcs, "src", "snk")
            value = len(B) - int(flow) - self.b[v]  # max over X containing v of |B[X]| - b(X)
            if best_value is None or value > best_value:
                best_value = value
                best_X = frozenset({v} | {u for u in self.digraph.vertices
                                          if ("vtx", u) in cut})
        witness = best_X if best_value is not None and best_value >= 0 else None
        self._memo[B] = witness
        return witness

    def independent(self, B: Iterable[int]) -> bool:
        return self.violation_witness(B) is None


def sparsity_independent(matroid: SparsityMatroid, B: Iterable[int]):
    """(True, None) when independent, else (False, violating X)."""
    witness = matroid.violation_witness(B)
    return (witness is None), witness


def is_b_branching(digraph: Digraph, b: dict[str, int], B: Iterable[int]) -> bool:
    """Indegree condition plus sparsity condition; b=1 gives plain branchings."""
    b = check_capacities(digraph, b)
    B = digraph.check_arcset(B)
    if not PartitionMatroid(digraph, b).independent(B):
        return False
    return SparsityMatroid(digraph, b).independent(B)


def weighted_matroid_intersection(m1, m2, weights, r: int, sense: str = "min"):
    """Optimal common independent set of size exactly r, or None if infeasible.

    Shortest augmenting paths in the exchange graph, with (cost, #arcs,
    lexicographic) tie-breaking for determinism.  m1 and m2 expose
    independent(); the ground set is the digraph's arc index range.
    """
    if r < 0:
        raise InputError("target size must be nonnegative")
    if sense not in ("min", "max"):
        raise InputError("sense must be 'min' or 'max'")
    ground = sorted(m1.digraph.all_arcs)
    w = {a: Q(weights[a]) for a in ground}
    if sense == "max":
        w = {a: -w[a] for a in ground}

    current: set[int] = set()
    while len(current) < r:
        path = _augmenting_path(m1, m2, ground, current, w)
        if path is None:
            return None
        current.symmetric_difference_update(path)
    return frozenset(current)


def _augmenting_path(m1, m2, ground, current, w):
    """Min-cost, then fewest-arcs, then lexicographically least augmenting path."""
    frozen = frozenset(current)
    outside = [y for y in ground if y not in frozen]
    sources = [y for y in outside if m1.independent(frozen | {y})]
    sinks = {y for y in outside if m2.independent(frozen | {y})}
    if not sources:
        return None

    succ: dict[int, list[int]] = {a: [] for a in ground}
    for x in sorted(frozen):
        base = frozen - {x}
        for y in outside:
            swapped = base | {y}
            if m1.independent(swapped):
                succ[x].append(y)
            if m2.independent(swapped):
                succ[y].append(x)

    def node_cost(e: int):
        return -w[e] if e in frozen else w[e]

    # Bellman-Ford on (cost, length, path) labels; paths are short here.
    best: dict[int, tuple] = {}
    for y in sorted(sources):
        label = (node_cost(y), 1, (y,))
        if y not in best or label < best[y]:
            best[y] = label
    for _ in range(len(ground)):
        changed = False
        for u in sorted(best):
            cost, length, path = best[u]
            for v in succ[u]:
                if v in path:
                    continue
                label = (cost + node_cost(v), length + 1, path + (v,))
                if v not in best or label < best[v]:
                    best[v] = label
                    changed = True
        if not changed:
            break

    candidates = [best[y] for y in sorted(sinks) if y in best]
    if not candidates:
        return None
    return set(min(candidates)[2])


def min_weight_b_branching_exact_indegrees(digraph: Digraph, b: dict[str, int],
                                           weights, t: dict[str, int]):
    """Minimum-weight b-branching with d_B^-(v) = t(v) for every v, or None.

    A full-rank common independent set of the partition matroid with caps t
    and the sparsity matroid has the prescribed indegrees exactly.
    """
    b = check_capacities(digraph, b)
    for v in digraph.vertices:
        tv = t.get(v, 0)
        if not isinstance(tv, int) or tv < 0 or tv > b[v]:
            raise InputError("prescribed indegree t(%r) must lie in [0, b(%r)]" % (v, v))
    m1 = PartitionMatroid(digraph, {v: t.get(v, 0) for v in digraph.vertices})
    m2 = SparsityMatroid(digraph, b)
    r = sum(t.get(v, 0) for v in digraph.vertices)
    return weighted_matroid_intersection(m1, m2, weights, r, "min")
