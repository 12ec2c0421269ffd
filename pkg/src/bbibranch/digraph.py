"""Digraph primitives: cuts, reachability, strong components, exact max-flow.

Arc sets are plain frozensets of arc indices.  Arc identity is the index into
the digraph's arc list, so parallel arcs are first-class citizens.  All types
are immutable after construction.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable

from .errors import InputError
from .rationals import Q, ZERO


class UnboundedFlow(Exception):
    """The flow network has an infinite-capacity source-to-sink path."""


class Digraph:
    """A loopless digraph with stable arc indices and parallel arcs allowed."""

    def __init__(self, vertices: Iterable[str], arcs: Iterable[tuple[str, str]]):
        self.vertices: tuple[str, ...] = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise InputError("duplicate vertex ids")
        self._vindex = {v: i for i, v in enumerate(self.vertices)}
        self.arcs: tuple[tuple[str, str], ...] = tuple(arcs)
        for i, (tail, head) in enumerate(self.arcs):
            if tail not in self._vindex or head not in self._vindex:
                raise InputError("arc %d has unknown endpoint: %s -> %s" % (i, tail, head))
            if tail == head:
                raise InputError("arc %d is a loop at %s" % (i, tail))
        self._in_arcs: dict[str, tuple[int, ...]] = {v: () for v in self.vertices}
        self._out_arcs: dict[str, tuple[int, ...]] = {v: () for v in self.vertices}
        in_acc: dict[str, list[int]] = {v: [] for v in self.vertices}
        out_acc: dict[str, list[int]] = {v: [] for v in self.vertices}
        for i, (tail, head) in enumerate(self.arcs):
            out_acc[tail].append(i)
            in_acc[head].append(i)
        for v in self.vertices:
            self._in_arcs[v] = tuple(in_acc[v])
            self._out_arcs[v] = tuple(out_acc[v])
        self.all_arcs: frozenset[int] = frozenset(range(len(self.arcs)))

    def __len__(self) -> int:
        return len(self.vertices)

    def num_arcs(self) -> int:
        return len(self.arcs)

    def tail(self, a: int) -> str:
        return self.arcs[a][0]

    def head(self, a: int) -> str:
        return self.arcs[a][1]

    def check_vertices(self, X: Iterable[str]) -> frozenset[str]:
        X = frozenset(X)
        for v in X:
            if v not in self._vindex:
                raise InputError("unknown vertex id: %r" % (v,))
        return X

    def check_arcset(self, B: Iterable[int]) -> frozenset[int]:
        B = frozenset(B)
        for a in B:
            if not (0 <= a < len(self.arcs)):
                raise InputError("invalid arc index: %r" % (a,))
        return B

    def in_arcs(self, v: str) -> tuple[int, ...]:
        return self._in_arcs[v]

    def out_arcs(self, v: str) -> tuple[int, ...]:
        return self._out_arcs[v]

    # -- induced arc sets and cuts ------------------------------------------

    def induced_arcs(self, B: Iterable[int], X: Iterable[str]) -> frozenset[int]:
        """Arcs of B with both endpoints in X (B[X])."""
        B = self.check_arcset(B)
        X = self.check_vertices(X)
        return frozenset(a for a in B if self.arcs[a][0] in X and self.arcs[a][1] in X)

    def arcs_between(self, B: Iterable[int], X: Iterable[str], Y: Iterable[str]) -> frozenset[int]:
        """Arcs of B with tail in X and head in Y (B[X,Y])."""
        B = self.check_arcset(B)
        X = self.check_vertices(X)
        Y = self.check_vertices(Y)
        return frozenset(a for a in B if self.arcs[a][0] in X and self.arcs[a][1] in Y)

    def _check_cut_set(self, X: Iterable[str]) -> frozenset[str]:
        X = self.check_vertices(X)
        if not X or len(X) == len(self.vertices):
            raise InputError("cut undefined for empty X or X = V")
        return X

    def in_cut(self, B: Iterable[int], X: Iterable[str]) -> frozenset[int]:
        """Arcs of B entering X from outside."""
        B = self.check_arcset(B)
        X = self._check_cut_set(X)
        return frozenset(a for a in B if self.arcs[a][0] not in X and self.arcs[a][1] in X)

    def out_cut(self, B: Iterable[int], X: Iterable[str]) -> frozenset[int]:
        """Arcs of B leaving X."""
        B = self.check_arcset(B)
        X = self._check_cut_set(X)
        return frozenset(a for a in B if self.arcs[a][0] in X and self.arcs[a][1] not in X)

    def in_degree(self, B: Iterable[int], v: str) -> int:
        B = frozenset(B)
        return sum(1 for a in self._in_arcs[v] if a in B)

    def out_degree(self, B: Iterable[int], v: str) -> int:
        B = frozenset(B)
        return sum(1 for a in self._out_arcs[v] if a in B)

    # -- reachability and components ----------------------------------------

    def reachable_from(self, B: Iterable[int], X: Iterable[str]) -> frozenset[str]:
        """Vertices reachable from X using only arcs of B (includes X)."""
        B = self.check_arcset(B)
        X = self.check_vertices(X)
        seen = set(X)
        queue = deque(sorted(X, key=self._vindex.get))
        out_by_b: dict[str, list[str]] = {}
        for a in B:
            tail, head = self.arcs[a]
            out_by_b.setdefault(tail, []).append(head)
        while queue:
            u = queue.popleft()
            for w in out_by_b.get(u, ()):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return frozenset(seen)

    def strong_components(self) -> list[tuple[frozenset[str], bool]]:
        """Strongly connected components, each flagged as source or not.

        A component is a source component when no arc enters it from outside.
        Components come out in a deterministic (reverse topological of the
        condensation reversed, i.e. sources first is not guaranteed) order.
        """
        index_of: dict[str, int] = {}
        lowlink: dict[str, int] = {}
        on_stack: set[str] = set()
        stack: list[str] = []
        counter = [0]
        components: list[frozenset[str]] = []

        out_by_v = {v: [self.arcs[a][1] for a in self._out_arcs[v]] for v in self.vertices}

        def strongconnect(root: str) -> None:
            # Iterative Tarjan; recursion depth is unbounded otherwise.
            work = [(root, 0)]
            while work:
                v, pi = work.pop()
                if pi == 0:
                    index_of[v] = lowlink[v] = counter[0]
                    counter[0] += 1
                    stack.append(v)
                    on_stack.add(v)
                recurse = False
                succs = out_by_v[v]
                for i in range(pi, len(succs)):
                    w = succs[i]
                    if w not in index_of:
                        work.append((v, i + 1))
                        work.append((w, 0))
                        recurse = True
                        break
                    if w in on_stack:
                        lowlink[v] = min(lowlink[v], index_of[w])
                if recurse:
                    continue
                if lowlink[v] == index_of[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    components.append(frozenset(comp))
                if work:
                    parent = work[-1][0]
                    lowlink[parent] = min(lowlink[parent], lowlink[v])

        for v in self.vertices:
            if v not in index_of:
                strongconnect(v)

        result = []
        for comp in components:
            is_source = not any(
                self.arcs[a][0] not in comp and self.arcs[a][1] in comp
                for a in range(len(self.arcs))
            )
            result.append((comp, is_source))
        return result


class Bipartition:
    """An {S,T} split of a digraph's vertices with no arc from T to S."""

    def __init__(self, digraph: Digraph, side: dict[str, str]):
        for v in digraph.vertices:
            if side.get(v) not in ("S", "T"):
                raise InputError("vertex %r must be assigned side 'S' or 'T'" % (v,))
        self.side = dict(side)
        self.S: frozenset[str] = frozenset(v for v in digraph.vertices if side[v] == "S")
        self.T: frozenset[str] = frozenset(v for v in digraph.vertices if side[v] == "T")
        if not self.S or not self.T:
            raise InputError("both sides of the bipartition must be nonempty")
        for i, (tail, head) in enumerate(digraph.arcs):
            if side[tail] == "T" and side[head] == "S":
                raise InputError("arc %d goes from T to S: %s -> %s" % (i, tail, head))


def check_capacities(digraph: Digraph, b: dict[str, int]) -> dict[str, int]:
    """Validate a positive integer capacity vector over all vertices."""
    out = {}
    for v in digraph.vertices:
        val = b.get(v)
        if not isinstance(val, int) or val < 1:
            raise InputError("capacity b(%r) must be a positive integer" % (v,))
        out[v] = val
    return out


def max_flow_min_cut(nodes, arcs, source, sink):
    """Exact max-flow / min-cut on a generic capacitated network.

    ``arcs`` is a list of (tail, head, capacity) with rational capacities;
    capacity None means infinite.  Returns (flow value, source-side cut set);
    the flow value equals the cut capacity exactly.  Raises UnboundedFlow when
    an infinite-capacity path joins source and sink.
    """
    nodes = list(nodes)
    if source == sink:
        raise InputError("source and sink must differ")
    node_set = set(nodes)
    if source not in node_set or sink not in node_set:
        raise InputError("source/sink must be network nodes")

    # Unboundedness: a source-sink path over infinite arcs only.
    inf_adj: dict = {}
    for tail, head, cap in arcs:
        if cap is None:
            inf_adj.setdefault(tail, []).append(head)
    seen = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in inf_adj.get(u, ()):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    if sink in seen:
        raise UnboundedFlow("infinite-capacity path from source to sink")

    finite_total = sum((Q(c) for _, _, c in arcs if c is not None), ZERO)
    big = finite_total + 1

    # Residual graph over arc slots: even index = forward, odd = backward.
    cap = []
    adj: dict = {v: [] for v in node_set}
    ends = []
    for tail, head, c in arcs:
        if c is not None and Q(c) < 0:
            raise InputError("negative capacity on arc %r -> %r" % (tail, head))
        c_eff = big if c is None else Q(c)
        adj[tail].append(len(cap))
        cap.append(c_eff)
        ends.append(head)
        adj[head].append(len(cap))
        cap.append(ZERO)
        ends.append(tail)

    flow = ZERO
    while True:
        # BFS for a shortest augmenting path (Edmonds-Karp).
        parent_arc: dict = {source: None}
        queue = deque([source])
        while queue and sink not in parent_arc:
            u = queue.popleft()
            for slot in adj[u]:
                w = ends[slot]
                if w not in parent_arc and cap[slot] > 0:
                    parent_arc[w] = slot
                    queue.append(w)
        if sink not in parent_arc:
            break
        # Bottleneck along the path.
        bottleneck = None
        v = sink
        while v != source:
            slot = parent_arc[v]
            if bottleneck is None or cap[slot] < bottleneck:
                bottleneck = cap[slot]
            v = ends[slot ^ 1]
        v = sink
        while v != source:
            slot = parent_arc[v]
            cap[slot] -= bottleneck
            cap[slot ^ 1] += bottleneck
            v = ends[slot ^ 1]
        flow += bottleneck

    # Source side of the min cut = residual-reachable nodes.
    side = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for slot in adj[u]:
            w = ends[slot]
            if w not in side and cap[slot] > 0:
                side.add(w)
                queue.append(w)
    return flow, frozenset(side)
