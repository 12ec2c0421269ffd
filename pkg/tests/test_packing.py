"""Disjoint packing machinery against exhaustive oracles."""

import itertools
import random

import pytest

from bbibranch.bibranching import Instance, is_b_bibranching
from bbibranch.digraph import Digraph
from bbibranch.errors import InputError
from bbibranch.matroids import is_b_branching
from bbibranch.packing import (CutFamilyOracle, SupermodularOracle,
                               build_system, find_integral_point, g_value,
                               integer_decomposition_check,
                               pack_b_bibranchings,
                               pack_prescribed_b_branchings, packing_number,
                               partition_cross_arcs, verify_packing)
from bbibranch.rationals import Q

from conftest import (one_arc_instance, oracle_max_disjoint_packing,
                      random_digraph, random_instance)


def doubled_instance():
    """Two parallel s -> t arcs: packs two disjoint singletons."""
    D = Digraph(["s", "t"], [("s", "t"), ("s", "t")])
    return Instance(D, {"s": "S", "t": "T"}, {"s": 1, "t": 1}, [5, 7])


class TestPackingNumber:
    def test_one_arc(self):
        wit = packing_number(one_arc_instance())
        assert (wit.t_min, wit.s_min, wit.bicut_min, wit.k) == (1, 1, 1, 1)

    def test_doubled(self):
        wit = packing_number(doubled_instance())
        assert wit.k == 2

    def test_invariant_k_is_the_min(self):
        rng = random.Random(40)
        for _ in range(10):
            inst = random_instance(rng, rng.randint(1, 2), rng.randint(1, 2),
                                   0.6, 2, 3, max_arcs=10,
                                   extra_cross=rng.randint(0, 2))
            wit = packing_number(inst)
            assert wit.k == min(wit.t_min, wit.s_min, wit.bicut_min)

    def test_matches_exhaustive_oracle(self):
        rng = random.Random(41)
        for _ in range(25):
            inst = random_instance(rng, rng.randint(1, 2), rng.randint(1, 3),
                                   0.55, 2, 3, max_arcs=10,
                                   extra_cross=rng.randint(0, 3))
            assert packing_number(inst).k == oracle_max_disjoint_packing(inst)


class TestCutFamilies:
    def test_members_are_head_unions(self):
        inst = doubled_instance()
        fam = CutFamilyOracle(inst, 1)
        assert fam.members() == [frozenset({0, 1})]
        assert fam.generators({0, 1}) == [frozenset({"t"})]

    def test_rejects_non_member(self):
        inst = doubled_instance()
        fam = CutFamilyOracle(inst, 1)
        with pytest.raises(InputError):
            fam.generators({0})

    def test_intersecting_closure(self):
        rng = random.Random(42)
        for _ in range(10):
            inst = random_instance(rng, 2, 3, 0.6, 2, 3, max_arcs=12)
            for side in (1, 2):
                fam = CutFamilyOracle(inst, side)
                members = fam.members()
                for C1, C2 in itertools.combinations(members, 2):
                    if C1 & C2:
                        assert fam.contains(C1 | C2)
                        assert fam.contains(C1 & C2)


class TestSupermodularFunction:
    def test_isolated_head_gives_k(self):
        # g of a cut generated by a T-vertex with no within-side in-arc is k.
        inst = doubled_instance()
        g = SupermodularOracle(CutFamilyOracle(inst, 1), 2)
        assert g_value(g, {0, 1}) == 2

    def test_matches_direct_enumeration(self):
        rng = random.Random(43)
        for _ in range(8):
            inst = random_instance(rng, 2, 3, 0.6, 2, 3, max_arcs=12)
            D = inst.digraph
            k = max(1, packing_number(inst).k)
            for side in (1, 2):
                fam = CutFamilyOracle(inst, side)
                g = SupermodularOracle(fam, k)
                verts = sorted(inst.T if side == 1 else inst.S)
                inner = D.induced_arcs(D.all_arcs,
                                       inst.T if side == 1 else inst.S)
                H = inst.cross_arcs()
                for C in fam.members():
                    best = None
                    for r in range(1, len(verts) + 1):
                        for combo in itertools.combinations(verts, r):
                            U = frozenset(combo)
                            if side == 1:
                                cut = frozenset(a for a in H if D.head(a) in U)
                                deg = len(D.in_cut(inner, U))
                            else:
                                cut = frozenset(a for a in H if D.tail(a) in U)
                                deg = len(D.out_cut(inner, U))
                            if cut == C and (best is None or k - deg > best):
                                best = k - deg
                    assert g_value(g, C) == best

    def test_supermodular_on_crossing_pairs(self):
        rng = random.Random(44)
        for _ in range(8):
            inst = random_instance(rng, 2, 3, 0.6, 2, 3, max_arcs=12)
            k = max(1, packing_number(inst).k)
            for side in (1, 2):
                fam = CutFamilyOracle(inst, side)
                g = SupermodularOracle(fam, k)
                members = fam.members()
                for C1, C2 in itertools.combinations(members, 2):
                    if C1 & C2:
                        assert (g_value(g, C1) + g_value(g, C2)
                                <= g_value(g, C1 | C2) + g_value(g, C1 & C2))

    def test_upper_bound_claim(self):
        rng = random.Random(45)
        for _ in range(8):
            inst = random_instance(rng, 2, 2, 0.7, 2, 3, max_arcs=12,
                                   extra_cross=2)
            k = packing_number(inst).k
            if k < 1:
                continue
            for side in (1, 2):
                g = SupermodularOracle(CutFamilyOracle(inst, side), k)
                for C in g.family.members():
                    assert g_value(g, C) <= min(k, len(C))


class TestIntegralPoint:
    def test_single_arc_k1(self):
        inst = one_arc_instance()
        p1 = build_system(inst, 1, 1)
        p2 = build_system(inst, 2, 1)
        point = p1.check_point({0: Q(1)})
        assert point == []
        assert find_integral_point(p1, p2) == {0: 1}

    def test_uniform_point_feasible_and_vertex_integral(self):
        rng = random.Random(46)
        done = 0
        for _ in range(30):
            inst = random_instance(rng, rng.randint(1, 2), rng.randint(1, 2),
                                   0.6, 2, 3, max_arcs=10,
                                   extra_cross=rng.randint(0, 3))
            k = packing_number(inst).k
            if k < 1:
                continue
            p1 = build_system(inst, 1, k)
            p2 = build_system(inst, 2, k)
            uniform = {a: Q(1, k) for a in p1.var_arcs}
            assert p1.check_point(uniform) == []
            assert p2.check_point(uniform) == []
            point = find_integral_point(p1, p2)
            assert set(point.values()) <= {0, 1}
            as_q = {a: Q(v) for a, v in point.items()}
            assert p1.check_point(as_q) == []
            assert p2.check_point(as_q) == []
            done += 1
        assert done >= 10


class TestPartition:
    def test_k1_returns_all_cross_arcs(self):
        inst = one_arc_instance()
        assert partition_cross_arcs(inst, 1) == [frozenset({0})]

    def test_doubled_splits_singletons(self):
        classes = partition_cross_arcs(doubled_instance(), 2)
        assert sorted(classes) == [frozenset({0}), frozenset({1})]

    def test_rejects_bad_k(self):
        with pytest.raises(InputError):
            partition_cross_arcs(one_arc_instance(), 2)

    def test_random_partitions_meet_conditions(self):
        from bbibranch.packing import _partition_conditions

        rng = random.Random(47)
        done = 0
        for _ in range(25):
            inst = random_instance(rng, rng.randint(1, 2), rng.randint(1, 2),
                                   0.6, 2, 3, max_arcs=10,
                                   extra_cross=rng.randint(0, 3))
            k = packing_number(inst).k
            if k < 1:
                continue
            classes = partition_cross_arcs(inst, k)
            assert len(classes) == k
            union = frozenset().union(*classes)
            assert union == inst.cross_arcs()
            assert sum(len(c) for c in classes) == len(union)
            assert _partition_conditions(inst, k, classes) is None
            done += 1
        assert done >= 8


class TestPrescribedPacking:
    def test_single_prescription_delegates(self):
        D = Digraph(["a", "b"], [("a", "b"), ("a", "b")])
        res = pack_prescribed_b_branchings(D, {"a": 1, "b": 1},
                                           [{"a": 0, "b": 1}])
        assert res.branchings is not None
        assert len(res.branchings[0]) == 1

    def test_two_parallel_arcs_split(self):
        D = Digraph(["a", "t"], [("a", "t"), ("a", "t")])
        res = pack_prescribed_b_branchings(D, {"a": 1, "t": 1},
                                           [{"t": 1}, {"t": 1}])
        assert res.branchings is not None
        assert res.branchings[0] | res.branchings[1] == frozenset({0, 1})
        assert not (res.branchings[0] & res.branchings[1])

    def test_degree_condition_failure_reported(self):
        D = Digraph(["a", "t"], [("a", "t")])
        res = pack_prescribed_b_branchings(D, {"a": 1, "t": 1},
                                           [{"t": 1}, {"t": 1}])
        assert res.branchings is None
        assert res.failed_condition == {"condition": "degree", "vertex": "t"}

    def test_iff_matches_exhaustive_oracle(self):
        rng = random.Random(48)
        done = 0
        while done < 20:
            D, b, _ = random_digraph(rng, rng.randint(2, 4), 0.55, 2)
            m = D.num_arcs()
            if m > 7:
                continue
            k = rng.randint(1, 3)
            prescriptions = [{v: rng.randint(0, b[v]) for v in D.vertices}
                             for _ in range(k)]
            exists = False
            for labels in itertools.product(range(k + 1), repeat=m):
                classes = [frozenset(a for a in range(m) if labels[a] == j)
                           for j in range(k)]
                if all(all(D.in_degree(c, v) == pj[v] for v in D.vertices)
                       for c, pj in zip(classes, prescriptions)) \
                        and all(is_b_branching(D, b, c) for c in classes):
                    exists = True
                    break
            res = pack_prescribed_b_branchings(D, b, prescriptions)
            assert (res.branchings is not None) == exists
            if exists:
                for c, pj in zip(res.branchings, prescriptions):
                    assert is_b_branching(D, b, c)
                    assert all(D.in_degree(c, v) == pj[v] for v in D.vertices)
            done += 1

    def test_hypothesis_violation_reported(self):
        D = Digraph(["a", "t"], [("a", "t")])
        res = pack_prescribed_b_branchings(D, {"a": 1, "t": 1},
                                           [{"a": 1, "t": 1}])
        assert res.hypothesis_violations == [0]


class TestFullPacking:
    def test_one_arc_certificate(self):
        cert = pack_b_bibranchings(one_arc_instance())
        assert cert.k == 1
        assert cert.assembled == [frozenset({0})]

    def test_doubled_certificate(self):
        cert = pack_b_bibranchings(doubled_instance())
        assert cert.k == 2
        assert sorted(cert.assembled) == [frozenset({0}), frozenset({1})]

    def test_certificate_size_equals_packing_number(self):
        rng = random.Random(49)
        for _ in range(25):
            inst = random_instance(rng, rng.randint(1, 2), rng.randint(1, 3),
                                   0.55, 2, 3, max_arcs=10,
                                   extra_cross=rng.randint(0, 3))
            cert = pack_b_bibranchings(inst)
            assert cert.k == packing_number(inst).k
            assert len(cert.assembled) == cert.k
            assert verify_packing(inst, cert.assembled)

    def test_weak_direction_bound(self):
        # Any verified packing is no larger than each of the three witnesses.
        rng = random.Random(50)
        for _ in range(10):
            inst = random_instance(rng, rng.randint(1, 2), rng.randint(1, 2),
                                   0.6, 2, 3, max_arcs=10,
                                   extra_cross=rng.randint(0, 2))
            cert = pack_b_bibranchings(inst)
            wit = cert.witness
            assert cert.k <= wit.t_min
            assert cert.k <= wit.s_min
            assert cert.k <= wit.bicut_min


class TestIntegerDecomposition:
    def test_k1_identity(self):
        inst = one_arc_instance()
        classes = integer_decomposition_check(inst, 1, [1])
        assert classes == [frozenset({0})]

    def test_k_copies_of_one_solution(self):
        inst = doubled_instance()
        classes = integer_decomposition_check(inst, 2, [2, 2])
        assert len(classes) == 2
        for a in (0, 1):
            assert sum(1 for c in classes if a in c) == 2

    def test_precondition_failure_names_row(self):
        inst = one_arc_instance()
        with pytest.raises(InputError, match="indegree row"):
            integer_decomposition_check(inst, 2, [1])

    def test_random_points_decompose(self):
        from bbibranch.bibranching import brute_force_shortest

        rng = random.Random(51)
        done = 0
        while done < 10:
            inst = random_instance(rng, rng.randint(1, 2), rng.randint(1, 3),
                                   0.6, 2, 5, max_arcs=10)
            sol = brute_force_shortest(inst)
            if sol is None:
                continue
            k = rng.randint(1, 3)
            m = inst.digraph.num_arcs()
            x = [k if a in sol.arcs else 0 for a in range(m)]
            for a in range(m):
                if x[a] < k and rng.random() < 0.3:
                    x[a] += rng.randint(0, k - x[a])
            classes = integer_decomposition_check(inst, k, x)
            assert len(classes) == k
            for a in range(m):
                assert sum(1 for c in classes if a in c) == x[a]
            for c in classes:
                assert is_b_bibranching(inst, c)
            done += 1
