"""Digraph primitives against definitional oracles."""

import itertools
import random

import pytest

from bbibranch.digraph import (Bipartition, Digraph, UnboundedFlow,
                               check_capacities, max_flow_min_cut)
from bbibranch.errors import InputError
from bbibranch.rationals import Q

from conftest import random_digraph


def small_graph():
    return Digraph(["a", "b", "c", "d"],
                   [("a", "b"), ("b", "c"), ("c", "a"), ("c", "d"),
                    ("a", "b")])  # parallel arc 4 duplicates arc 0


class TestConstruction:
    def test_loop_rejected(self):
        with pytest.raises(InputError):
            Digraph(["a"], [("a", "a")])

    def test_unknown_endpoint_rejected(self):
        with pytest.raises(InputError):
            Digraph(["a"], [("a", "b")])

    def test_duplicate_vertex_rejected(self):
        with pytest.raises(InputError):
            Digraph(["a", "a"], [])

    def test_parallel_arcs_have_distinct_indices(self):
        D = small_graph()
        assert D.arcs[0] == D.arcs[4] == ("a", "b")
        assert D.in_degree(D.all_arcs, "b") == 2


class TestCutsAndDegrees:
    def test_induced_arcs(self):
        D = small_graph()
        assert D.induced_arcs(D.all_arcs, {"a", "b"}) == frozenset({0, 4})

    def test_arcs_between(self):
        D = small_graph()
        assert D.arcs_between(D.all_arcs, {"c"}, {"d"}) == frozenset({3})

    def test_in_cut_matches_scan(self):
        D = small_graph()
        rng = random.Random(0)
        for _ in range(20):
            X = {v for v in D.vertices if rng.random() < 0.5}
            if not X or len(X) == len(D.vertices):
                continue
            expect = frozenset(a for a in range(D.num_arcs())
                               if D.tail(a) not in X and D.head(a) in X)
            assert D.in_cut(D.all_arcs, X) == expect
            expect_out = frozenset(a for a in range(D.num_arcs())
                                   if D.tail(a) in X and D.head(a) not in X)
            assert D.out_cut(D.all_arcs, X) == expect_out

    def test_cut_rejects_degenerate_sets(self):
        D = small_graph()
        with pytest.raises(InputError):
            D.in_cut(D.all_arcs, set())
        with pytest.raises(InputError):
            D.out_cut(D.all_arcs, set(D.vertices))


class TestReachability:
    def test_reachable_simple(self):
        D = small_graph()
        assert D.reachable_from({0, 1}, {"a"}) == frozenset({"a", "b", "c"})

    def test_reachable_matches_matrix_closure(self):
        # Oracle: boolean adjacency closure by repeated squaring.
        rng = random.Random(1)
        for _ in range(15):
            D, _, _ = random_digraph(rng, rng.randint(2, 6), 0.4, 1)
            n = len(D.vertices)
            idx = {v: i for i, v in enumerate(D.vertices)}
            reach = [[i == j for j in range(n)] for i in range(n)]
            for (t, h) in D.arcs:
                reach[idx[t]][idx[h]] = True
            for _ in range(n):
                reach = [[reach[i][j] or any(reach[i][k] and reach[k][j]
                                             for k in range(n))
                          for j in range(n)] for i in range(n)]
            for v in D.vertices:
                expect = frozenset(u for u in D.vertices if reach[idx[v]][idx[u]])
                assert D.reachable_from(D.all_arcs, {v}) == expect


class TestStrongComponents:
    def test_cycle_plus_tail(self):
        D = small_graph()
        comps = dict(D.strong_components())
        assert frozenset({"a", "b", "c"}) in comps
        assert comps[frozenset({"a", "b", "c"})] is True  # source component
        assert comps[frozenset({"d"})] is False

    def test_matches_pairwise_reachability_oracle(self):
        rng = random.Random(2)
        for _ in range(20):
            D, _, _ = random_digraph(rng, rng.randint(2, 6), 0.35, 1)
            comps = D.strong_components()
            # Oracle: u ~ v iff mutually reachable.
            expected = set()
            remaining = set(D.vertices)
            while remaining:
                v = min(remaining)
                comp = frozenset(u for u in D.vertices
                                 if v in D.reachable_from(D.all_arcs, {u})
                                 and u in D.reachable_from(D.all_arcs, {v}))
                expected.add(comp)
                remaining -= comp
            assert {c for c, _ in comps} == expected
            for comp, is_source in comps:
                entering = any(D.tail(a) not in comp and D.head(a) in comp
                               for a in range(D.num_arcs()))
                assert is_source == (not entering)


class TestBipartition:
    def test_rejects_t_to_s_arc(self):
        D = Digraph(["s", "t"], [("t", "s")])
        with pytest.raises(InputError):
            Bipartition(D, {"s": "S", "t": "T"})

    def test_rejects_empty_side(self):
        D = Digraph(["s", "u"], [])
        with pytest.raises(InputError):
            Bipartition(D, {"s": "S", "u": "S"})

    def test_rejects_missing_side(self):
        D = Digraph(["s", "t"], [])
        with pytest.raises(InputError):
            Bipartition(D, {"s": "S"})


class TestCapacities:
    def test_rejects_zero_and_missing(self):
        D = Digraph(["a", "b"], [])
        with pytest.raises(InputError):
            check_capacities(D, {"a": 0, "b": 1})
        with pytest.raises(InputError):
            check_capacities(D, {"a": 1})
        assert check_capacities(D, {"a": 2, "b": 1}) == {"a": 2, "b": 1}


class TestMaxFlow:
    def test_textbook_network(self):
        nodes = ["s", "a", "b", "t"]
        arcs = [("s", "a", 3), ("s", "b", 2), ("a", "b", 1),
                ("a", "t", 2), ("b", "t", 3)]
        flow, cut = max_flow_min_cut(nodes, arcs, "s", "t")
        assert flow == 5
        assert "s" in cut and "t" not in cut

    def test_rational_capacities(self):
        arcs = [("s", "a", Q(1, 2)), ("a", "t", Q(1, 3))]
        flow, _ = max_flow_min_cut(["s", "a", "t"], arcs, "s", "t")
        assert flow == Q(1, 3)

    def test_infinite_path_raises(self):
        with pytest.raises(UnboundedFlow):
            max_flow_min_cut(["s", "t"], [("s", "t", None)], "s", "t")

    def test_matches_min_cut_enumeration(self):
        rng = random.Random(3)
        for _ in range(15):
            n = rng.randint(3, 5)
            nodes = list(range(n))
            arcs = [(i, j, rng.randint(0, 4)) for i in nodes for j in nodes
                    if i != j and rng.random() < 0.5]
            flow, cut = max_flow_min_cut(nodes, arcs, 0, n - 1)
            inner = [v for v in nodes if v not in (0, n - 1)]
            best = None
            for r in range(len(inner) + 1):
                for combo in itertools.combinations(inner, r):
                    side = {0} | set(combo)
                    cap = sum(c for (t, h, c) in arcs
                              if t in side and h not in side)
                    if best is None or cap < best:
                        best = cap
            assert flow == (best if best is not None else 0)
            # The returned cut achieves the flow value exactly.
            cap = sum(c for (t, h, c) in arcs if t in cut and h not in cut)
            assert cap == flow
