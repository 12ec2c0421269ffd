"""Disjoint packing of b-bibranchings: exact min-max value and constructions.

The packing number is the minimum of two degree ratios and the smallest
bicut.  The constructive direction colors the cross arcs through a pair of
generalized polymatroids (one per side), then completes each color class
with prescribed-indegree branchings on the T side and cobranchings on the
S side.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .bibranching import Instance, bibranching_report, is_b_bibranching, subgraph
from .digraph import Digraph, check_capacities
from .errors import GuardError, InputError, TheoremViolation
from .matroids import SparsityMatroid
from .rationals import Q, ONE, ZERO

FAMILY_SIDE_LIMIT = 12
EXHAUSTIVE_PARTITION_LIMIT = 200000
PRESCRIBED_ARC_LIMIT = 24


# ---------------------------------------------------------------------------
# The min-max value
# ---------------------------------------------------------------------------

@dataclass
class MinMaxWitness:
    t_min: int
    t_argmin: str
    s_min: int
    s_argmin: str
    bicut_min: int
    bicut_witness: frozenset
    k: int


def packing_number(instance: Instance) -> MinMaxWitness:
    """Exact maximum number of disjoint b-bibranchings, with all witnesses."""
    from .lpsolve import _min_bicut_candidates

    D = instance.digraph
    t_pairs = sorted((len(D.in_arcs(v)) // instance.b[v], v)
                     for v in instance.T)
    s_pairs = sorted((len(D.out_arcs(u)) // instance.b[u], u)
                     for u in instance.S)
    ones = [ONE] * D.num_arcs()
    bicut_best = None
    for value, bicut in _min_bicut_candidates(instance, ones):
        entry = (int(value), tuple(sorted(bicut.U)))
        if bicut_best is None or entry < bicut_best[:2]:
            bicut_best = entry + (bicut.U,)
    assert bicut_best is not None
    t_min, t_arg = t_pairs[0]
    s_min, s_arg = s_pairs[0]
    bicut_min = bicut_best[0]
    return MinMaxWitness(t_min, t_arg, s_min, s_arg, bicut_min, bicut_best[2],
                         min(t_min, s_min, bicut_min))


def verify_packing(instance: Instance, classes: Iterable[Iterable[int]]) -> bool:
    """Pairwise disjoint and each class a b-bibranching."""
    sets = [instance.digraph.check_arcset(c) for c in classes]
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if sets[i] & sets[j]:
                return False
    return all(is_b_bibranching(instance, c) for c in sets)


# ---------------------------------------------------------------------------
# Cut families and their supermodular functions
# ---------------------------------------------------------------------------

class CutFamilyOracle:
    """The cuts delta^-_H(U) over nonempty U on one side of the bipartition.

    side 1 ranges U over subsets of T (arcs counted by head), side 2 over
    subsets of S (arcs counted by tail).  ``ground`` restricts H to a subset
    of the cross arcs, which the peeling recursion relies on.
    """

    def __init__(self, instance: Instance, side: int,
                 ground: Optional[Iterable[int]] = None):
        if side not in (1, 2):
            raise InputError("side must be 1 or 2")
        self.instance = instance
        self.side = side
        cross = instance.cross_arcs()
        self.ground = frozenset(cross if ground is None else ground)
        if not self.ground <= cross:
            raise InputError("ground set must consist of cross arcs")
        self.side_vertices = sorted(instance.T if side == 1 else instance.S)
        if len(self.side_vertices) > FAMILY_SIDE_LIMIT:
            raise GuardError("cut family side limited to %d vertices"
                             % FAMILY_SIDE_LIMIT)
        D = instance.digraph
        self._generators: dict[frozenset[int], list[frozenset[str]]] = {}
        for r in range(1, len(self.side_vertices) + 1):
            for combo in itertools.combinations(self.side_vertices, r):
                U = frozenset(combo)
                if side == 1:
                    C = frozenset(a for a in self.ground if D.head(a) in U)
                else:
                    C = frozenset(a for a in self.ground if D.tail(a) in U)
                self._generators.setdefault(C, []).append(U)

    def members(self) -> list[frozenset[int]]:
        return sorted(self._generators, key=sorted)

    def contains(self, C: Iterable[int]) -> bool:
        return frozenset(C) in self._generators

    def generators(self, C: Iterable[int]) -> list[frozenset[str]]:
        C = frozenset(C)
        if C not in self._generators:
            raise InputError("arc set is not a member of the cut family")
        return list(self._generators[C])


class SupermodularOracle:
    """g(C) = max over generating U of k minus the within-side indegree of U.

    Side 1 measures arcs of A[T] entering U; side 2 measures arcs of A[S]
    leaving U.  ``degree_override`` substitutes residual cross-arc data is
    not needed here because only within-side arcs enter the formula.
    """

    def __init__(self, family: CutFamilyOracle, k: int):
        if k < 1:
            raise InputError("k must be at least 1")
        self.family = family
        self.k = k
        instance = family.instance
        D = instance.digraph
        if family.side == 1:
            inner = D.induced_arcs(D.all_arcs, instance.T)
        else:
            inner = D.induced_arcs(D.all_arcs, instance.S)
        self._cache: dict[frozenset[int], int] = {}
        for C, gens in family._generators.items():
            best = None
            for U in gens:
                if family.side == 1:
                    deg = len(D.in_cut(inner, U)) if len(U) < len(D) else 0
                else:
                    deg = len(D.out_cut(inner, U)) if len(U) < len(D) else 0
                value = k - deg
                if best is None or value > best:
                    best = value
            self._cache[C] = best


def g_value(oracle: SupermodularOracle, C: Iterable[int]) -> int:
    C = frozenset(C)
    if not oracle.family.contains(C):
        raise InputError("arc set is not a member of the cut family")
    return oracle._cache[C]


# ---------------------------------------------------------------------------
# The two generalized-polymatroid systems and integral points
# ---------------------------------------------------------------------------

@dataclass
class GPolymatroidSystem:
    """Explicit inequality rows over the ground cross arcs for one side."""

    side: int
    k: int
    var_arcs: list[int]
    rows: list[tuple[dict[int, int], str, int, str]] = field(default_factory=list)

    def check_point(self, x: dict[int, object]) -> list[str]:
        """Tags of all violated rows (bounds included), empty when feasible."""
        bad = []
        for a in self.var_arcs:
            val = Q(x[a])
            if val < 0 or val > 1:
                bad.append("bounds[%d]" % a)
        for coeffs, rel, rhs, tag in self.rows:
            total = sum((Q(x[a]) * c for a, c in coeffs.items()), ZERO)
            ok = total <= rhs if rel == "<=" else total >= rhs
            if not ok:
                bad.append(tag)
        return bad


def build_system(instance: Instance, side: int, k: int,
                 ground: Optional[Iterable[int]] = None,
                 degree_in=None, degree_out=None) -> GPolymatroidSystem:
    """Instantiate the row system for one side at packing target k.

    degree_in / degree_out override the full-graph degrees d_A^- / d_A^+
    with residual values during peeling.
    """
    D = instance.digraph
    family = CutFamilyOracle(instance, side, ground)
    g = SupermodularOracle(family, k)
    system = GPolymatroidSystem(side, k, sorted(family.ground))
    for C in family.members():
        gC = g_value(g, C)
        coeffs = {a: 1 for a in C}
        tag = "cut[%s]" % ",".join(str(a) for a in sorted(C))
        system.rows.append((coeffs, "<=", len(C) - gC + 1, "upper-" + tag))
        if gC == k:
            system.rows.append((coeffs, ">=", 1, "lower-" + tag))
    if side == 1:
        for v in sorted(instance.T):
            deg = (degree_in[v] if degree_in is not None
                   else len(D.in_arcs(v)))
            coeffs = {a: 1 for a in family.ground if D.head(a) == v}
            system.rows.append((coeffs, "<=", deg - (k - 1) * instance.b[v],
                                "degree[%s]" % v))
    else:
        for u in sorted(instance.S):
            deg = (degree_out[u] if degree_out is not None
                   else len(D.out_arcs(u)))
            coeffs = {a: 1 for a in family.ground if D.tail(a) == u}
            system.rows.append((coeffs, "<=", deg - (k - 1) * instance.b[u],
                                "degree[%s]" % u))
    return system


def find_integral_point(p1: GPolymatroidSystem, p2: GPolymatroidSystem) -> dict[int, int]:
    """A common 0/1 point of the two systems, as a vertex of an exact LP.

    Membership of the uniform point 1/k is certified first; a fractional
    vertex is a hard failure carrying the dumped LP, since the intersection
    of the two systems is an integer polyhedron.
    """
    from .lpsolve import RationalLP, dump_lp, simplex_solve

    if p1.var_arcs != p2.var_arcs or p1.k != p2.k:
        raise InputError("the two systems must share ground set and k")
    arcs = p1.var_arcs
    uniform = {a: Q(1) / p1.k for a in arcs}
    violated = p1.check_point(uniform) + p2.check_point(uniform)
    if violated:
        raise TheoremViolation("uniform point 1/k violates the row system",
                               payload={"rows": violated})

    col = {a: j for j, a in enumerate(arcs)}
    lp = RationalLP(len(arcs), [ONE] * len(arcs), "min")
    for j in range(len(arcs)):
        lp.set_bounds(j, ZERO, ONE)
    for system in (p1, p2):
        for coeffs, rel, rhs, _tag in system.rows:
            lp.add_row({col[a]: c for a, c in coeffs.items()}, rel, rhs)
    result = simplex_solve(lp)
    if result.status != "optimal":
        raise TheoremViolation("row system LP unexpectedly %s" % result.status,
                               payload={"lp": dump_lp(lp)})
    point = {a: result.x[col[a]] for a in arcs}
    if any(val not in (0, 1) for val in point.values()):
        raise TheoremViolation("vertex of the system intersection is fractional",
                               payload={"lp": dump_lp(lp), "x": point})
    return {a: int(point[a]) for a in arcs}


# ---------------------------------------------------------------------------
# Coloring the cross arcs
# ---------------------------------------------------------------------------

def _partition_conditions(instance: Instance, k: int,
                          classes: list[frozenset[int]]) -> Optional[str]:
    """None when the three partition conditions hold, else a failure tag."""
    D = instance.digraph
    for side in (1, 2):
        family = CutFamilyOracle(instance, side)
        g = SupermodularOracle(family, k)
        for C in family.members():
            hit = sum(1 for H_j in classes if C & H_j)
            if hit < g_value(g, C):
                return "side %d cut %s hit by %d < g = %d" % (
                    side, sorted(C), hit, g_value(g, C))
    for H_j in classes:
        for v in instance.T:
            if D.in_degree(H_j, v) > len(D.in_arcs(v)) - (k - 1) * instance.b[v]:
                return "indegree cap at %s" % v
        for u in instance.S:
            if D.out_degree(H_j, u) > len(D.out_arcs(u)) - (k - 1) * instance.b[u]:
                return "outdegree cap at %s" % u
    return None


def _exhaustive_partition(instance: Instance, k: int) -> Optional[list[frozenset[int]]]:
    H = sorted(instance.cross_arcs())
    if k ** len(H) > EXHAUSTIVE_PARTITION_LIMIT:
        raise GuardError("exhaustive cross-arc partition search too large")
    for labels in itertools.product(range(k), repeat=len(H)):
        classes = [frozenset(a for a, lab in zip(H, labels) if lab == j)
                   for j in range(k)]
        if _partition_conditions(instance, k, classes) is None:
            return classes
    return None


def partition_cross_arcs(instance: Instance, k: int) -> list[frozenset[int]]:
    """Split H = A[S,T] into k classes meeting the coloring conditions.

    Peels one class per round as an integral point of the two row systems
    built on the residual data, then re-verifies the final conditions; a
    failed verification falls back to exhaustive search before giving up.
    """
    if k < 1 or k > packing_number(instance).k:
        raise InputError("k must lie between 1 and the packing number")
    D = instance.digraph
    classes: list[frozenset[int]] = []
    try:
        remaining = set(instance.cross_arcs())
        deg_in = {v: len(D.in_arcs(v)) for v in instance.T}
        deg_out = {u: len(D.out_arcs(u)) for u in instance.S}
        for stage in range(k, 1, -1):
            p1 = build_system(instance, 1, stage, remaining, degree_in=deg_in)
            p2 = build_system(instance, 2, stage, remaining, degree_out=deg_out)
            point = find_integral_point(p1, p2)
            H_j = frozenset(a for a, val in point.items() if val)
            classes.append(H_j)
            remaining -= H_j
            for a in H_j:
                deg_in[D.head(a)] -= 1
                deg_out[D.tail(a)] -= 1
        classes.append(frozenset(remaining))
        failure = _partition_conditions(instance, k, classes)
        if failure is None:
            return classes
    except TheoremViolation:
        failure = "peeling raised"
    fallback = _exhaustive_partition(instance, k)
    if fallback is None:
        raise TheoremViolation("no cross-arc partition satisfies the coloring "
                               "conditions", payload={"k": k, "first": failure})
    return fallback


# ---------------------------------------------------------------------------
# Prescribed-indegree packing of b-branchings
# ---------------------------------------------------------------------------

@dataclass
class PrescribedPackingResult:
    branchings: Optional[list[frozenset[int]]]
    failed_condition: Optional[dict]
    hypothesis_violations: list[int]


def pack_prescribed_b_branchings(digraph: Digraph, b: dict[str, int],
                                 prescriptions: list[dict[str, int]]) -> PrescribedPackingResult:
    """Disjoint b-branchings B_1..B_k with exact indegree vectors, if possible.

    Existence is decided by the degree condition and the cut condition; when
    both hold a deterministic backtracking search produces the branchings,
    and failure of that search despite the conditions is a theorem violation.
    Prescriptions equal to b violate the theorem's hypothesis; those indices
    are reported but the construction still proceeds.
    """
    b = check_capacities(digraph, b)
    k = len(prescriptions)
    if k == 0:
        return PrescribedPackingResult([], None, [])
    for bj in prescriptions:
        for v in digraph.vertices:
            val = bj.get(v, 0)
            if not isinstance(val, int) or val < 0 or val > b[v]:
                raise InputError("prescription values must lie in [0, b(v)]")
    hypothesis = [j for j, bj in enumerate(prescriptions)
                  if all(bj.get(v, 0) == b[v] for v in digraph.vertices)]

    for v in digraph.vertices:
        if len(digraph.in_arcs(v)) < sum(bj.get(v, 0) for bj in prescriptions):
            return PrescribedPackingResult(
                None, {"condition": "degree", "vertex": v}, hypothesis)
    if len(digraph.vertices) > FAMILY_SIDE_LIMIT:
        raise GuardError("cut condition check limited to %d vertices"
                         % FAMILY_SIDE_LIMIT)
    verts = sorted(digraph.vertices)
    for r in range(1, len(verts) + 1):
        for combo in itertools.combinations(verts, r):
            X = frozenset(combo)
            bX = sum(b[v] for v in X)
            tight = sum(1 for bj in prescriptions
                        if sum(bj.get(v, 0) for v in X) == bX)
            cut = (len(digraph.in_cut(digraph.all_arcs, X))
                   if len(X) < len(verts) else 0)
            if cut < tight:
                return PrescribedPackingResult(
                    None, {"condition": "cut", "set": X}, hypothesis)

    branchings = _prescribed_search(digraph, b, prescriptions)
    if branchings is None:
        raise TheoremViolation("prescribed packing conditions hold but the "
                               "search found nothing",
                               payload={"prescriptions": prescriptions})
    return PrescribedPackingResult(branchings, None, hypothesis)


def _prescribed_search(digraph: Digraph, b: dict[str, int],
                       prescriptions: list[dict[str, int]]):
    if digraph.num_arcs() > PRESCRIBED_ARC_LIMIT:
        raise GuardError("prescribed packing search limited to %d arcs"
                         % PRESCRIBED_ARC_LIMIT)
    k = len(prescriptions)
    sparsity = SparsityMatroid(digraph, b)
    targets = [{v: bj.get(v, 0) for v in digraph.vertices} for bj in prescriptions]
    deg = [{v: 0 for v in digraph.vertices} for _ in range(k)]
    classes: list[set[int]] = [set() for _ in range(k)]
    remaining_in = {v: len(digraph.in_arcs(v)) for v in digraph.vertices}

    def rec(i: int):
        for v in digraph.vertices:
            need = sum(max(0, targets[j][v] - deg[j][v]) for j in range(k))
            if need > remaining_in[v]:
                return None
        if i == digraph.num_arcs():
            if all(deg[j] == targets[j] for j in range(k)):
                return [frozenset(c) for c in classes]
            return None
        head = digraph.head(i)
        remaining_in[head] -= 1
        for j in range(k):
            if deg[j][head] < targets[j][head]:
                classes[j].add(i)
                deg[j][head] += 1
                if sparsity.independent(classes[j]):
                    found = rec(i + 1)
                    if found is not None:
                        return found
                deg[j][head] -= 1
                classes[j].discard(i)
        found = rec(i + 1)  # leave the arc unused
        remaining_in[head] += 1
        return found

    return rec(0)


# ---------------------------------------------------------------------------
# Full packing certificates
# ---------------------------------------------------------------------------

@dataclass
class PackingCertificate:
    k: int
    witness: MinMaxWitness
    cross_classes: list[frozenset[int]]
    branchings: list[frozenset[int]]
    cobranchings: list[frozenset[int]]
    assembled: list[frozenset[int]]
    hypothesis_violations: dict = field(default_factory=dict)


def pack_b_bibranchings(instance: Instance, k: Optional[int] = None) -> PackingCertificate:
    """k disjoint b-bibranchings, k defaulting to the exact packing number."""
    witness = packing_number(instance)
    if k is None:
        k = witness.k
    elif k > witness.k or k < 0:
        raise InputError("requested packing size exceeds the packing number")
    if k == 0:
        return PackingCertificate(0, witness, [], [], [], [])

    D = instance.digraph
    classes = partition_cross_arcs(instance, k)

    d_T, map_T = subgraph(D, instance.T)
    b_T = {v: instance.b[v] for v in instance.T}
    t_prescriptions = [
        {v: max(0, instance.b[v] - D.in_degree(H_j, v)) for v in instance.T}
        for H_j in classes]
    t_result = pack_prescribed_b_branchings(d_T, b_T, t_prescriptions)
    if t_result.branchings is None:
        raise TheoremViolation("T-side prescribed packing infeasible",
                               payload=t_result.failed_condition)

    d_S, map_S = subgraph(D, instance.S, reverse=True)
    b_S = {u: instance.b[u] for u in instance.S}
    s_prescriptions = [
        {u: max(0, instance.b[u] - D.out_degree(H_j, u)) for u in instance.S}
        for H_j in classes]
    s_result = pack_prescribed_b_branchings(d_S, b_S, s_prescriptions)
    if s_result.branchings is None:
        raise TheoremViolation("S-side prescribed packing infeasible",
                               payload=s_result.failed_condition)

    branchings = [frozenset(map_T[i] for i in B) for B in t_result.branchings]
    cobranchings = [frozenset(map_S[i] for i in B) for B in s_result.branchings]
    assembled = [classes[j] | branchings[j] | cobranchings[j] for j in range(k)]
    if not verify_packing(instance, assembled):
        raise TheoremViolation("assembled classes are not a disjoint packing")
    return PackingCertificate(
        k, witness, classes, branchings, cobranchings, assembled,
        {"t_side": t_result.hypothesis_violations,
         "s_side": s_result.hypothesis_violations})


# ---------------------------------------------------------------------------
# Integer decomposition
# ---------------------------------------------------------------------------

def integer_decomposition_check(instance: Instance, k: int, x) -> list[frozenset[int]]:
    """Write an integer vector of the k-dilated polytope as a sum of k
    b-bibranching indicators; each original arc a lands in exactly x(a)
    of the returned classes."""
    from .lpsolve import all_bicuts

    D = instance.digraph
    if k < 1:
        raise InputError("k must be at least 1")
    x = [x[a] for a in range(D.num_arcs())]
    for a, val in enumerate(x):
        if not isinstance(val, int) or val < 0 or val > k:
            raise InputError("x(%d) must be an integer in [0, k]" % a)
    for v in sorted(instance.T):
        if sum(x[a] for a in D.in_arcs(v)) < k * instance.b[v]:
            raise InputError("scaled indegree row fails at %s" % v)
    for u in sorted(instance.S):
        if sum(x[a] for a in D.out_arcs(u)) < k * instance.b[u]:
            raise InputError("scaled outdegree row fails at %s" % u)
    for bicut in all_bicuts(instance):
        if sum(x[a] for a in bicut.arcs) < k:
            raise InputError("scaled bicut row fails at U = %s"
                             % sorted(bicut.U))

    # Multigraph with x(a) parallel copies of each arc.
    copy_of: list[int] = []
    multi_arcs = []
    for a in range(D.num_arcs()):
        for _ in range(x[a]):
            copy_of.append(a)
            multi_arcs.append(D.arcs[a])
    multi = Digraph(D.vertices, multi_arcs)
    side = {v: ("S" if v in instance.S else "T") for v in D.vertices}
    weights = [instance.weights[a] for a in copy_of]
    multi_instance = Instance(multi, side, instance.b, weights)

    certificate = pack_b_bibranchings(multi_instance, k=k)
    used = [set(cls) for cls in certificate.assembled]
    leftovers = set(range(multi.num_arcs())) - set().union(*used) \
        if used else set(range(multi.num_arcs()))
    used[0] |= leftovers  # superset closure keeps class 0 valid

    # Spread the copies of each arc over distinct classes: keep one copy in
    # every class already holding the arc, hand spare copies to classes
    # without it (growing a class keeps it valid).
    assignment: list[set[int]] = [set() for _ in range(k)]
    for a in range(D.num_arcs()):
        holders = sorted(j for j in range(k)
                         if any(copy_of[c] == a for c in used[j]))
        spare = x[a] - len(holders)
        assert spare >= 0
        for j in holders:
            assignment[j].add(a)
        for j in range(k):
            if spare == 0:
                break
            if j not in holders:
                assignment[j].add(a)
                spare -= 1
    result = [frozenset(cls) for cls in assignment]

    counts = [sum(1 for cls in result if a in cls) for a in range(D.num_arcs())]
    if counts != x:
        raise TheoremViolation("decomposition does not sum to x")
    for cls in result:
        if not is_b_bibranching(instance, cls):
            raise TheoremViolation("decomposition class is not a b-bibranching")
    return result
