"""Shared generators and independent oracles for the test suite.

The oracles here are deliberately naive (subset enumeration, definitional
scans) so they cannot share bugs with the optimized implementations they
check.
"""

from __future__ import annotations

import itertools
import random

from bbibranch.bibranching import Instance, is_b_bibranching
from bbibranch.digraph import Digraph

# ---------------------------------------------------------------------------
# Seeded instance generators
# ---------------------------------------------------------------------------


def random_instance(rng: random.Random, nS: int, nT: int, density: float,
                    bmax: int, wmax: int, max_arcs: int = 14,
                    extra_cross: int = 0) -> Instance:
    """A random bipartitioned instance; never emits T-to-S arcs or loops."""
    s_ids = ["s%d" % i for i in range(nS)]
    t_ids = ["t%d" % i for i in range(nT)]
    allowed = []
    for u in s_ids:
        allowed += [(u, v) for v in s_ids if v != u]
        allowed += [(u, v) for v in t_ids]
    for u in t_ids:
        allowed += [(u, v) for v in t_ids if v != u]
    arcs = [a for a in allowed if rng.random() < density]
    for _ in range(extra_cross):
        arcs.append((rng.choice(s_ids), rng.choice(t_ids)))
    arcs = arcs[:max_arcs]
    side = {v: "S" for v in s_ids}
    side.update({v: "T" for v in t_ids})
    b = {v: rng.randint(1, bmax) for v in side}
    w = [rng.randint(0, wmax) for _ in arcs]
    return Instance(Digraph(s_ids + t_ids, arcs), side, b, w)


def random_digraph(rng: random.Random, n: int, density: float, bmax: int,
                   wmax: int = 9):
    """(digraph, b, weights) without any bipartition structure."""
    ids = ["v%d" % i for i in range(n)]
    arcs = [(u, v) for u in ids for v in ids
            if u != v and rng.random() < density]
    b = {v: rng.randint(1, bmax) for v in ids}
    w = [rng.randint(0, wmax) for _ in arcs]
    return Digraph(ids, arcs), b, w


def one_arc_instance(weight=5) -> Instance:
    """The smallest feasible instance: s -> t with unit capacities."""
    D = Digraph(["s", "t"], [("s", "t")])
    return Instance(D, {"s": "S", "t": "T"}, {"s": 1, "t": 1}, [weight])


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------


def all_subsets(m: int):
    for r in range(m + 1):
        yield from (frozenset(c) for c in itertools.combinations(range(m), r))


def oracle_is_branching(digraph: Digraph, B: frozenset[int]) -> bool:
    """Definitional branching test: indegree <= 1 everywhere and no cycle."""
    for v in digraph.vertices:
        if digraph.in_degree(B, v) > 1:
            return False
    # Cycle scan: repeatedly strip vertices with no incoming B-arc.
    alive = set(digraph.vertices)
    arcs = set(B)
    while True:
        removable = {v for v in alive
                     if not any(digraph.head(a) == v and digraph.tail(a) in alive
                                for a in arcs)}
        if not removable:
            break
        alive -= removable
        arcs = {a for a in arcs
                if digraph.tail(a) in alive and digraph.head(a) in alive}
    return not alive or not arcs


def oracle_sparsity_independent(digraph: Digraph, b: dict, B: frozenset[int]) -> bool:
    """|B[X]| <= b(X) - 1 checked by full subset enumeration."""
    verts = list(digraph.vertices)
    for r in range(1, len(verts) + 1):
        for combo in itertools.combinations(verts, r):
            X = frozenset(combo)
            inside = sum(1 for a in B
                         if digraph.tail(a) in X and digraph.head(a) in X)
            if inside > sum(b[v] for v in X) - 1:
                return False
    return True


def oracle_b_branchings(digraph: Digraph, b: dict):
    """All b-branchings by definitional enumeration."""
    out = []
    for B in all_subsets(digraph.num_arcs()):
        if all(digraph.in_degree(B, v) <= b[v] for v in digraph.vertices) \
                and oracle_sparsity_independent(digraph, b, B):
            out.append(B)
    return out


def oracle_max_disjoint_packing(instance: Instance) -> int:
    """Exhaustive maximum number of pairwise disjoint b-bibranchings."""
    m = instance.digraph.num_arcs()
    singles = [B for B in all_subsets(m) if B and is_b_bibranching(instance, B)]
    best = 0

    def rec(count, used, start):
        nonlocal best
        best = max(best, count)
        for i in range(start, len(singles)):
            if not (singles[i] & used):
                rec(count + 1, used | singles[i], i + 1)

    rec(0, frozenset(), 0)
    return best
