"""Exact rational LP machinery.

A two-phase tableau simplex with Bland's rule over exact rationals, bicut
separation by max-flow, the primal cutting plane for the shortest
b-bibranching LP, and the desk-scale total-dual-integrality spot check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .bibranching import Instance, Solution, bibranching_report
from .errors import GuardError, InfeasibleInstance, InputError, TheoremViolation
from .rationals import ONE, Q, ZERO, is_integral, rat_str

TDI_VERTEX_LIMIT = 10
TDI_NODE_LIMIT = 20000


# ---------------------------------------------------------------------------
# Exact simplex
# ---------------------------------------------------------------------------

class RationalLP:
    """min/max c.x subject to rows (coeffs, rel, rhs) and per-variable bounds."""

    def __init__(self, num_vars: int, objective, sense: str = "min"):
        if sense not in ("min", "max"):
            raise InputError("sense must be 'min' or 'max'")
        self.num_vars = num_vars
        self.objective = [Q(objective[j]) for j in range(num_vars)]
        self.sense = sense
        self.rows: list[tuple[dict[int, object], str, object]] = []
        self.lower = [ZERO] * num_vars
        self.upper: list[Optional[object]] = [None] * num_vars

    def add_row(self, coeffs: dict[int, object], rel: str, rhs) -> int:
        if rel not in ("<=", ">=", "="):
            raise InputError("relation must be one of <=, >=, =")
        clean = {j: Q(c) for j, c in coeffs.items() if Q(c) != 0}
        for j in clean:
            if not (0 <= j < self.num_vars):
                raise InputError("row references unknown variable %d" % j)
        self.rows.append((clean, rel, Q(rhs)))
        return len(self.rows) - 1

    def set_bounds(self, j: int, lower, upper) -> None:
        self.lower[j] = Q(lower)
        self.upper[j] = None if upper is None else Q(upper)


@dataclass
class SimplexResult:
    status: str                      # optimal | infeasible | unbounded
    x: Optional[list] = None
    objective: Optional[object] = None
    row_duals: Optional[list] = None   # one per original row
    bound_duals: Optional[list] = None  # one per variable upper bound (None if unbounded above)
    basis: Optional[list] = None


def simplex_solve(lp: RationalLP) -> SimplexResult:
    """Two-phase simplex with Bland's rule; exact rationals throughout."""
    n = lp.num_vars
    minimize = lp.sense == "min"
    base_cost = [c if minimize else -c for c in lp.objective]

    # Shift variables to lower bound 0 and append upper bounds as rows.
    work_rows: list[tuple[list, str, object]] = []
    row_origin: list[tuple[str, int, int]] = []   # (kind, index, sign)
    for i, (coeffs, rel, rhs) in enumerate(lp.rows):
        dense = [ZERO] * n
        shift = ZERO
        for j, c in coeffs.items():
            dense[j] = c
            shift += c * lp.lower[j]
        work_rows.append((dense, rel, rhs - shift))
        row_origin.append(("row", i, 1))
    for j in range(n):
        if lp.upper[j] is not None:
            dense = [ZERO] * n
            dense[j] = ONE
            work_rows.append((dense, "<=", lp.upper[j] - lp.lower[j]))
            row_origin.append(("ub", j, 1))

    # Normalize to nonnegative right-hand sides.
    for idx, (dense, rel, rhs) in enumerate(work_rows):
        if rhs < 0:
            dense = [-c for c in dense]
            rhs = -rhs
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
            kind, orig, _ = row_origin[idx]
            row_origin[idx] = (kind, orig, -1)
            work_rows[idx] = (dense, rel, rhs)

    m = len(work_rows)
    num_cols = n
    col_kind = ["x"] * n
    tableau = [list(dense) for dense, _, _ in work_rows]
    rhs_col = [rhs for _, _, rhs in work_rows]
    basis = [-1] * m
    slack_col_of_row = [-1] * m
    artificial_cols = []

    def add_column(kind: str, entries: dict[int, object]) -> int:
        nonlocal num_cols
        for i in range(m):
            tableau[i].append(entries.get(i, ZERO))
        col_kind.append(kind)
        num_cols += 1
        return num_cols - 1

    for i, (_, rel, _) in enumerate(work_rows):
        if rel == "<=":
            col = add_column("slack", {i: ONE})
            slack_col_of_row[i] = col
            basis[i] = col
        elif rel == ">=":
            col = add_column("surplus", {i: -ONE})
            slack_col_of_row[i] = col
        # '=' rows get only an artificial.
    for i, (_, rel, _) in enumerate(work_rows):
        if rel in (">=", "="):
            col = add_column("artificial", {i: ONE})
            artificial_cols.append(col)
            basis[i] = col
            if rel == "=":
                slack_col_of_row[i] = col

    def pivot(row: int, col: int) -> None:
        inv = ONE / tableau[row][col]
        tableau[row] = [c * inv for c in tableau[row]]
        rhs_col[row] *= inv
        for i in range(m):
            if i != row and tableau[i][col] != 0:
                factor = tableau[i][col]
                src = tableau[row]
                dst = tableau[i]
                for jj in range(num_cols):
                    if src[jj] != 0:
                        dst[jj] -= factor * src[jj]
                rhs_col[i] -= factor * rhs_col[row]
        basis[row] = col

    def reduced_costs(costs: list) -> list:
        red = list(costs)
        for i in range(m):
            cb = costs[basis[i]]
            if cb != 0:
                row = tableau[i]
                for jj in range(num_cols):
                    if row[jj] != 0:
                        red[jj] -= cb * row[jj]
        return red

    def optimize(costs: list, banned: set[int]) -> str:
        while True:
            red = reduced_costs(costs)
            entering = -1
            for jj in range(num_cols):
                if jj in banned or jj in basis:
                    continue
                if red[jj] < 0:
                    entering = jj
                    break
            if entering < 0:
                return "optimal"
            leaving = -1
            best_ratio = None
            for i in range(m):
                coef = tableau[i][entering]
                if coef > 0:
                    ratio = rhs_col[i] / coef
                    if (best_ratio is None or ratio < best_ratio
                            or (ratio == best_ratio and basis[i] < basis[leaving])):
                        best_ratio = ratio
                        leaving = i
            if leaving < 0:
                return "unbounded"
            pivot(leaving, entering)

    # Phase 1: drive out infeasibility.
    if artificial_cols:
        costs1 = [ZERO] * num_cols
        for col in artificial_cols:
            costs1[col] = ONE
        optimize(costs1, banned=set())
        infeas = sum((rhs_col[i] for i in range(m) if basis[i] in artificial_cols), ZERO)
        if infeas > 0:
            return SimplexResult(status="infeasible")
        # Pivot lingering artificials out of the (degenerate) basis.
        drop_rows = []
        for i in range(m):
            if basis[i] in artificial_cols:
                pivot_col = -1
                for jj in range(num_cols):
                    if col_kind[jj] != "artificial" and tableau[i][jj] != 0:
                        pivot_col = jj
                        break
                if pivot_col >= 0:
                    pivot(i, pivot_col)
                else:
                    drop_rows.append(i)
        if drop_rows:
            for i in reversed(drop_rows):
                del tableau[i], rhs_col[i], basis[i], work_rows[i]
                del row_origin[i], slack_col_of_row[i]
            m = len(tableau)

    costs2 = [ZERO] * num_cols
    for j in range(n):
        costs2[j] = base_cost[j]
    status = optimize(costs2, banned=set(artificial_cols))
    if status == "unbounded":
        return SimplexResult(status="unbounded")

    shifted = [ZERO] * num_cols
    for i in range(m):
        shifted[basis[i]] = rhs_col[i]
    x = [shifted[j] + lp.lower[j] for j in range(n)]
    objective = sum((lp.objective[j] * x[j] for j in range(n)), ZERO)

    red = reduced_costs(costs2)
    row_duals = [ZERO] * len(lp.rows)
    bound_duals: list[Optional[object]] = [None] * n
    for idx in range(m):
        kind, orig, sign = row_origin[idx]
        col = slack_col_of_row[idx]
        if col < 0:
            continue
        if col_kind[col] == "slack":
            y = -red[col]
        elif col_kind[col] == "surplus":
            y = red[col]
        else:  # artificial standing in for an '=' row
            y = -red[col]
        y *= sign
        if not minimize:
            y = -y
        if kind == "row":
            row_duals[orig] = y
        else:
            bound_duals[orig] = y
    return SimplexResult(status="optimal", x=x, objective=objective,
                         row_duals=row_duals, bound_duals=bound_duals,
                         basis=list(basis))


def dump_lp(lp: RationalLP) -> str:
    """Human-readable LP text with exact p/q coefficients."""
    def term(c, j):
        return "%s x%d" % (rat_str(c), j)

    lines = ["%s: %s" % (lp.sense, " + ".join(term(c, j) for j, c in enumerate(lp.objective)
                                              if c != 0) or "0")]
    lines.append("subject to:")
    for coeffs, rel, rhs in lp.rows:
        body = " + ".join(term(c, j) for j, c in sorted(coeffs.items()))
        lines.append("  %s %s %s" % (body or "0", rel, rat_str(rhs)))
    lines.append("bounds:")
    for j in range(lp.num_vars):
        hi = "inf" if lp.upper[j] is None else rat_str(lp.upper[j])
        lines.append("  %s <= x%d <= %s" % (rat_str(lp.lower[j]), j, hi))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Bicuts and separation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bicut:
    """delta^-(U) for U with empty != U <= T or T <= U < V."""
    U: frozenset[str]
    arcs: frozenset[int]


def all_bicuts(instance: Instance) -> list[Bicut]:
    """Every bicut, by enumeration of eligible U (desk scale only)."""
    from itertools import combinations

    D = instance.digraph
    cuts = []
    T_sorted = sorted(instance.T)
    for size in range(1, len(T_sorted) + 1):
        for combo in combinations(T_sorted, size):
            U = frozenset(combo)
            cuts.append(Bicut(U, D.in_cut(D.all_arcs, U)))
    S_sorted = sorted(instance.S)
    for size in range(1, len(S_sorted)):
        for combo in combinations(S_sorted, size):
            U = frozenset(instance.T | (instance.S - frozenset(combo)))
            cuts.append(Bicut(U, D.in_cut(D.all_arcs, U)))
    # T <= U = V \ (proper nonempty subset of S); U = T itself is covered above.
    return cuts


def _min_bicut_candidates(instance: Instance, x: list) -> list[tuple[object, Bicut]]:
    """One minimum cut per forced vertex, from both bicut families."""
    from .digraph import max_flow_min_cut

    D = instance.digraph
    results = []
    base_arcs = [(D.tail(a), D.head(a), Q(x[a])) for a in range(D.num_arcs())]
    nodes = list(D.vertices)

    for t in sorted(instance.T):
        net = base_arcs + [("src*", s, None) for s in sorted(instance.S)]
        value, side = max_flow_min_cut(nodes + ["src*"], net, "src*", t)
        U = frozenset(v for v in D.vertices if v not in side)
        results.append((value, Bicut(U, D.in_cut(D.all_arcs, U))))
    for s in sorted(instance.S):
        net = base_arcs + [(v, "snk*", None) for v in sorted(instance.T)]
        value, side = max_flow_min_cut(nodes + ["snk*"], net, s, "snk*")
        U = frozenset(v for v in D.vertices if v not in side)
        results.append((value, Bicut(U, D.in_cut(D.all_arcs, U))))
    return results


def separate_bicut(instance: Instance, x: list) -> Optional[Bicut]:
    """A most-violated bicut C with x(C) < 1, or None when all are satisfied."""
    for a in range(instance.digraph.num_arcs()):
        if Q(x[a]) < 0:
            raise InputError("separation requires x >= 0")
    best = None
    for value, cut in _min_bicut_candidates(instance, x):
        if value < 1 and (best is None or value < best[0]
                          or (value == best[0] and sorted(cut.U) < sorted(best[1].U))):
            best = (value, cut)
    return best[1] if best else None


def _violated_bicuts(instance: Instance, x: list) -> list[Bicut]:
    seen = set()
    out = []
    for value, cut in _min_bicut_candidates(instance, x):
        if value < 1 and cut.arcs not in seen:
            seen.add(cut.arcs)
            out.append(cut)
    return out


# ---------------------------------------------------------------------------
# Primal cutting plane
# ---------------------------------------------------------------------------

@dataclass
class CuttingPlaneResult:
    solution: Solution
    x: list
    value: object
    bicut_rows: list
    rounds: int
    fallback_triggered: bool
    row_duals: dict = field(default_factory=dict)


def _build_degree_lp(instance: Instance, boxed: bool = True) -> RationalLP:
    D = instance.digraph
    lp = RationalLP(D.num_arcs(), instance.weights, "min")
    if boxed:
        for a in range(D.num_arcs()):
            lp.set_bounds(a, ZERO, ONE)
    for v in sorted(instance.T):
        lp.add_row({a: ONE for a in D.in_arcs(v)}, ">=", instance.b[v])
    for u in sorted(instance.S):
        lp.add_row({a: ONE for a in D.out_arcs(u)}, ">=", instance.b[u])
    return lp


def _solve_with_cuts(instance: Instance, lp: RationalLP, cut_rows: list):
    """Alternate simplex and separation until no bicut is violated."""
    rounds = 0
    while True:
        rounds += 1
        result = simplex_solve(lp)
        if result.status == "infeasible":
            return None, rounds
        if result.status == "unbounded":  # cannot happen with w >= 0, x >= 0
            raise TheoremViolation("cutting-plane LP reported unbounded")
        violated = _violated_bicuts(instance, result.x)
        new = [cut for cut in violated if cut.arcs not in {c.arcs for c in cut_rows}]
        if not new:
            return result, rounds
        for cut in new:
            # Cut validity: genuinely violated at the iterate that produced it.
            assert sum((result.x[a] for a in cut.arcs), ZERO) < 1
            cut_rows.append(cut)
            lp.add_row({a: ONE for a in cut.arcs}, ">=", ONE)


def solve_primal_cutting_plane(instance: Instance) -> CuttingPlaneResult:
    """Row generation over the degree + bicut + box system; integral vertex out."""
    lp = _build_degree_lp(instance, boxed=True)
    cut_rows: list[Bicut] = []
    result, rounds = _solve_with_cuts(instance, lp, cut_rows)
    if result is None:
        raise InfeasibleInstance("cutting-plane LP infeasible")

    fallback = False
    if not all(is_integral(v) for v in result.x):
        # The polytope corollary says this never happens; branch and bound is
        # a defect-signal fallback, not a routine code path.
        fallback = True
        result, rounds_bb = _branch_and_bound(instance, cut_rows)
        rounds += rounds_bb
        if result is None:
            raise InfeasibleInstance("branch-and-bound found no integral point")

    arcs = frozenset(a for a in range(instance.digraph.num_arcs()) if result.x[a] == 1)
    solution = Solution(arcs, result.objective, bibranching_report(instance, arcs))
    duals = {}
    n_t = len(instance.T)
    n_s = len(instance.S)
    if result.row_duals is not None:
        t_sorted = sorted(instance.T)
        s_sorted = sorted(instance.S)
        for i, v in enumerate(t_sorted):
            duals[("v", v)] = result.row_duals[i]
        for i, u in enumerate(s_sorted):
            duals[("v", u)] = result.row_duals[n_t + i]
        for i, cut in enumerate(cut_rows):
            duals[("U", cut.U)] = result.row_duals[n_t + n_s + i]
    return CuttingPlaneResult(solution, result.x, result.objective, cut_rows,
                              rounds, fallback, duals)


def _branch_and_bound(instance: Instance, cut_rows: list):
    """Exact 0/1 branch and bound over the cutting-plane LP (fallback path)."""
    best = None
    rounds_total = 0
    stack = [dict()]
    while stack:
        fixing = stack.pop()
        lp = _build_degree_lp(instance, boxed=True)
        for a, val in fixing.items():
            lp.set_bounds(a, val, val)
        local_cuts = list(cut_rows)
        for cut in local_cuts:
            lp.add_row({a: ONE for a in cut.arcs}, ">=", ONE)
        result, rounds = _solve_with_cuts(instance, lp, local_cuts)
        for cut in local_cuts:
            if cut.arcs not in {c.arcs for c in cut_rows}:
                cut_rows.append(cut)
        rounds_total += rounds
        if result is None:
            continue
        if best is not None and result.objective >= best.objective:
            continue
        frac = [a for a in range(instance.digraph.num_arcs())
                if not is_integral(result.x[a])]
        if not frac:
            best = result
            continue
        stack.append({**fixing, frac[0]: ONE})
        stack.append({**fixing, frac[0]: ZERO})
    return best, rounds_total


# ---------------------------------------------------------------------------
# TDI spot check
# ---------------------------------------------------------------------------

@dataclass
class DualSolution:
    """A solution of the covering dual: y over singletons and the family U'."""
    y: dict
    objective: object


def _dual_family(instance: Instance):
    """The set family indexing dual variables: singletons plus U'."""
    from itertools import combinations

    family = [("v", v) for v in sorted(instance.digraph.vertices)]
    T_sorted = sorted(instance.T)
    for size in range(2, len(T_sorted) + 1):
        for combo in combinations(T_sorted, size):
            family.append(("U", frozenset(combo)))
    S_sorted = sorted(instance.S)
    for size in range(2, len(S_sorted) + 1):
        for combo in combinations(S_sorted, size):
            family.append(("U", frozenset(instance.T | (instance.S - frozenset(combo)))))
    return family


def _dual_coverage(instance: Instance, key) -> frozenset[int]:
    """Arcs whose dual constraint contains the variable y(key)."""
    D = instance.digraph
    if key[0] == "v":
        v = key[1]
        return frozenset(D.in_arcs(v)) if v in instance.T else frozenset(D.out_arcs(v))
    return D.in_cut(D.all_arcs, key[1])


def _build_dual_lp(instance: Instance, family):
    lp = RationalLP(len(family),
                    [instance.b[key[1]] if key[0] == "v" else ONE for key in family],
                    "max")
    per_arc: dict[int, dict[int, object]] = {a: {} for a in range(instance.digraph.num_arcs())}
    for idx, key in enumerate(family):
        for a in _dual_coverage(instance, key):
            per_arc[a][idx] = ONE
    for a in sorted(per_arc):
        lp.add_row(per_arc[a], "<=", instance.weights[a])
    return lp


def dual_feasible(instance: Instance, dual: DualSolution) -> bool:
    """Check y >= 0 and every arc-class dual constraint exactly."""
    for key, val in dual.y.items():
        if Q(val) < 0:
            return False
    for a in range(instance.digraph.num_arcs()):
        total = ZERO
        for key, val in dual.y.items():
            if a in _dual_coverage(instance, key):
                total += Q(val)
        if total > instance.weights[a]:
            return False
    return True


def _unboxed_primal_optimum(instance: Instance):
    """Optimum of the degree + bicut system without the box (explicit rows)."""
    lp = _build_degree_lp(instance, boxed=False)
    seen = set()
    for cut in all_bicuts(instance):
        if cut.arcs not in seen:
            seen.add(cut.arcs)
            lp.add_row({a: ONE for a in cut.arcs}, ">=", ONE)
    result = simplex_solve(lp)
    if result.status != "optimal":
        return None
    return result.objective


def tdi_spot_check(instance: Instance) -> dict:
    """Search for an integral optimal dual matching the primal optimum exactly.

    A 'found: False' outcome is a reportable discrepancy with the total dual
    integrality theorem, never silently accepted.
    """
    if len(instance.digraph.vertices) > TDI_VERTEX_LIMIT:
        raise GuardError("TDI spot check limited to %d vertices" % TDI_VERTEX_LIMIT)
    for w in instance.weights:
        if not is_integral(w):
            raise InputError("TDI spot check requires integer weights")

    primal = _unboxed_primal_optimum(instance)
    if primal is None:
        return {"status": "primal_infeasible", "found": False}

    family = _dual_family(instance)
    base_lp = _build_dual_lp(instance, family)
    base = simplex_solve(base_lp)
    if base.status != "optimal" or base.objective != primal:
        raise TheoremViolation(
            "strong duality failed: primal %s, dual %s"
            % (rat_str(primal), "?" if base.objective is None else rat_str(base.objective)))

    # Branch and bound over the optimal dual face for an integral point.
    nodes = 0
    stack: list[list[tuple[int, str, object]]] = [[]]
    while stack:
        extra = stack.pop()
        nodes += 1
        if nodes > TDI_NODE_LIMIT:
            return {"status": "search_exhausted", "found": False,
                    "primal": primal, "nodes": nodes}
        lp = _build_dual_lp(instance, family)
        for j, rel, bound in extra:
            lp.add_row({j: ONE}, rel, bound)
        result = simplex_solve(lp)
        if result.status != "optimal" or result.objective < primal:
            continue
        frac = [j for j in range(len(family)) if not is_integral(result.x[j])]
        if not frac:
            y = {family[j]: result.x[j] for j in range(len(family)) if result.x[j] != 0}
            dual = DualSolution(y, result.objective)
            assert dual_feasible(instance, dual)
            return {"status": "ok", "found": True, "primal": primal,
                    "dual": dual, "nodes": nodes}
        j = frac[0]
        val = result.x[j]
        floor_val = Q(val.numerator // val.denominator)
        stack.append(extra + [(j, "<=", floor_val)])
        stack.append(extra + [(j, ">=", floor_val + 1)])
    return {"status": "face_has_no_integral_point", "found": False,
            "primal": primal, "nodes": nodes}
