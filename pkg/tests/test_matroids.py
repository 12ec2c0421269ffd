"""Matroid layer against enumeration oracles."""

import random

import pytest

from bbibranch.digraph import Digraph
from bbibranch.errors import InputError
from bbibranch.matroids import (PartitionMatroid, SparsityMatroid,
                                is_b_branching,
                                min_weight_b_branching_exact_indegrees,
                                sparsity_independent,
                                weighted_matroid_intersection)

from conftest import (all_subsets, oracle_b_branchings, oracle_is_branching,
                      oracle_sparsity_independent, random_digraph)


class TestPartitionMatroid:
    def test_caps_respected(self):
        D = Digraph(["a", "b"], [("a", "b"), ("a", "b")])
        m = PartitionMatroid(D, {"a": 0, "b": 1})
        assert m.independent({0})
        assert not m.independent({0, 1})

    def test_negative_cap_rejected(self):
        D = Digraph(["a"], [])
        with pytest.raises(InputError):
            PartitionMatroid(D, {"a": -1})


class TestSparsityMatroid:
    def test_single_vertex_sets_enforced(self):
        # b(v) - 1 arcs allowed inside {u, v} jointly, none inside a singleton.
        D = Digraph(["u", "v"], [("u", "v"), ("v", "u")])
        m = SparsityMatroid(D, {"u": 1, "v": 1})
        assert m.independent({0})
        assert not m.independent({0, 1})  # |B[{u,v}]| = 2 > b - 1 = 1
        witness = m.violation_witness({0, 1})
        assert witness == frozenset({"u", "v"})

    def test_matches_subset_enumeration(self):
        rng = random.Random(10)
        for _ in range(12):
            D, b, _ = random_digraph(rng, rng.randint(2, 4), 0.6, 2)
            if D.num_arcs() > 7:
                continue
            m = SparsityMatroid(D, b)
            for B in all_subsets(D.num_arcs()):
                ok, witness = sparsity_independent(m, B)
                assert ok == oracle_sparsity_independent(D, b, B)
                if not ok:
                    inside = len(D.induced_arcs(B, witness))
                    assert inside >= sum(b[v] for v in witness)


class TestBBranching:
    def test_b_one_equals_plain_branching(self):
        rng = random.Random(11)
        for _ in range(12):
            D, _, _ = random_digraph(rng, rng.randint(2, 4), 0.5, 1)
            if D.num_arcs() > 7:
                continue
            b = {v: 1 for v in D.vertices}
            for B in all_subsets(D.num_arcs()):
                assert is_b_branching(D, b, B) == oracle_is_branching(D, B)

    def test_downward_closed(self):
        rng = random.Random(12)
        D, b, _ = random_digraph(rng, 4, 0.6, 2)
        for B in all_subsets(min(D.num_arcs(), 6)):
            if is_b_branching(D, b, B):
                for a in B:
                    assert is_b_branching(D, b, B - {a})


class TestWeightedIntersection:
    def test_matches_brute_force(self):
        rng = random.Random(13)
        for _ in range(10):
            D, b, w = random_digraph(rng, rng.randint(2, 4), 0.6, 2)
            m = D.num_arcs()
            if m > 7:
                continue
            m1 = PartitionMatroid(D, b)
            m2 = SparsityMatroid(D, b)
            commons = [B for B in all_subsets(m)
                       if m1.independent(B) and m2.independent(B)]
            for r in range(0, m + 1):
                of_size = [B for B in commons if len(B) == r]
                best = min((sum(w[a] for a in B) for B in of_size), default=None)
                got = weighted_matroid_intersection(m1, m2, w, r, "min")
                if best is None:
                    assert got is None
                else:
                    assert got is not None and len(got) == r
                    assert sum(w[a] for a in got) == best

    def test_max_sense(self):
        D = Digraph(["a", "b"], [("a", "b"), ("a", "b")])
        m1 = PartitionMatroid(D, {"a": 1, "b": 1})
        m2 = SparsityMatroid(D, {"a": 1, "b": 1})
        got = weighted_matroid_intersection(m1, m2, [3, 7], 1, "max")
        assert got == frozenset({1})

    def test_invalid_args(self):
        D = Digraph(["a"], [])
        m1 = PartitionMatroid(D, {"a": 1})
        m2 = SparsityMatroid(D, {"a": 1})
        with pytest.raises(InputError):
            weighted_matroid_intersection(m1, m2, [], -1)
        with pytest.raises(InputError):
            weighted_matroid_intersection(m1, m2, [], 0, "best")


class TestExactIndegrees:
    def test_matches_brute_force(self):
        rng = random.Random(14)
        for _ in range(10):
            D, b, w = random_digraph(rng, rng.randint(2, 4), 0.6, 2)
            if D.num_arcs() > 7:
                continue
            branchings = oracle_b_branchings(D, b)
            for _ in range(6):
                t = {v: rng.randint(0, b[v]) for v in D.vertices}
                matching = [B for B in branchings
                            if all(D.in_degree(B, v) == t[v]
                                   for v in D.vertices)]
                best = min((sum(w[a] for a in B) for B in matching),
                           default=None)
                got = min_weight_b_branching_exact_indegrees(D, b, w, t)
                if best is None:
                    assert got is None
                else:
                    assert sum(w[a] for a in got) == best
                    assert all(D.in_degree(got, v) == t[v] for v in D.vertices)

    def test_rejects_out_of_range_target(self):
        D = Digraph(["a", "b"], [("a", "b")])
        with pytest.raises(InputError):
            min_weight_b_branching_exact_indegrees(
                D, {"a": 1, "b": 1}, [1], {"a": 0, "b": 2})
