"""Rate-leakage trade-off engine.

Minimizing maximal leakage under a download-cost cap is convex; because
log2 is monotone it reduces to a linear program over the strategy PMF z
with one epigraph variable per reachable query.  A second LP pass then
pushes the download cost down to the lower envelope at the optimal
leakage.  A brute-force simplex-grid search validates the LP from below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .leakage import (
    ConditionalQueryTable,
    LinearForm,
    ResourceLimitError,
    maxl,
    normalize_pmf,
)

# epigraph slack when capping stage-2 leakage at the stage-1 optimum
LEAKAGE_CAP_SLACK = 1e-9
# largest barycentric grid enumerated by the brute-force oracle
DEFAULT_GRID_GUARD = 5_000_000
_CHUNK = 250_000
# solver outputs sit within float tolerance of a rational face; snapping
# is accepted only when it does not worsen the exact cost or leakage
_SNAP_DENOMINATOR = 1_000_000


@dataclass(frozen=True)
class LpProblem:
    """min c.x s.t. a_ub x <= b_ub, a_eq x = b_eq, 0 <= x <= 1.

    Variables are the n_z strategy probabilities followed by one
    epigraph variable per query.
    """

    n_z: int
    c: np.ndarray
    a_ub: sparse.csr_matrix
    b_ub: np.ndarray
    a_eq: sparse.csr_matrix
    b_eq: np.ndarray


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible"
    objective: float | None
    z: tuple[Fraction, ...] | None
    t: np.ndarray | None
    duality_gap: float | None

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


def _check_time_shared(tables) -> ConditionalQueryTable:
    tables = tuple(tables)
    first = tables[0]
    for tb in tables[1:]:
        if (
            tb.queries != first.queries
            or tb.forms != first.forms
            or tb.lengths != first.lengths
        ):
            raise ValueError(
                "per-server tables differ; the LP assumes a time-shared scheme"
            )
    return first


def reformulate(tables, cost_form: LinearForm, d_target) -> LpProblem:
    """Epigraph LP for one download-cost target.

    Stacks t_q >= P(q|m)(z) for every query and file, the cost cap, and
    the PMF normalization; log2 of the optimal objective is the leakage.
    """
    table = _check_time_shared(tables)
    n_z = table.alphabet_size
    n_t = len(table.queries)
    rows, cols, vals = [], [], []
    b_ub = []
    r = 0
    for ti, q in enumerate(table.queries):
        for m in range(1, table.m_files + 1):
            form = table.prob_form(q, m)
            for i, cf in form.coeffs.items():
                rows.append(r)
                cols.append(i)
                vals.append(float(cf))
            rows.append(r)
            cols.append(n_z + ti)
            vals.append(-1.0)
            b_ub.append(-float(form.constant))
            r += 1
    for i in range(n_z):
        cf = cost_form.coefficient(i)
        if cf != 0:
            rows.append(r)
            cols.append(i)
            vals.append(float(cf))
    b_ub.append(float(Fraction(d_target) - cost_form.constant))
    r += 1
    a_ub = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(r, n_z + n_t), dtype=float
    )
    a_eq = sparse.csr_matrix(
        (np.ones(n_z), (np.zeros(n_z, dtype=int), np.arange(n_z))),
        shape=(1, n_z + n_t),
        dtype=float,
    )
    c = np.concatenate([np.zeros(n_z), np.ones(n_t)])
    return LpProblem(
        n_z=n_z,
        c=c,
        a_ub=a_ub,
        b_ub=np.array(b_ub),
        a_eq=a_eq,
        b_eq=np.array([1.0]),
    )


def _with_leakage_cap(p: LpProblem, cost_form: LinearForm, cap: float) -> LpProblem:
    """Swap the objective to the download cost, capping total leakage."""
    n_t = p.c.size - p.n_z
    cap_row = sparse.csr_matrix(
        (np.ones(n_t), (np.zeros(n_t, dtype=int), p.n_z + np.arange(n_t))),
        shape=(1, p.c.size),
        dtype=float,
    )
    c = np.zeros(p.c.size)
    for i in range(p.n_z):
        c[i] = float(cost_form.coefficient(i))
    return LpProblem(
        n_z=p.n_z,
        c=c,
        a_ub=sparse.vstack([p.a_ub, cap_row], format="csr"),
        b_ub=np.concatenate([p.b_ub, [cap]]),
        a_eq=p.a_eq,
        b_eq=p.b_eq,
    )


def solve_lp(p: LpProblem) -> LpSolution:
    res = linprog(
        p.c,
        A_ub=p.a_ub,
        b_ub=p.b_ub,
        A_eq=p.a_eq,
        b_eq=p.b_eq,
        bounds=(0.0, 1.0),
        method="highs",
    )
    if res.status == 2:
        return LpSolution(
            status="infeasible", objective=None, z=None, t=None, duality_gap=None
        )
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    # strong duality: c.x equals the rhs-weighted sum of the marginals
    dual = (
        p.b_ub @ res.ineqlin.marginals
        + p.b_eq @ res.eqlin.marginals
        + np.sum(res.lower.marginals * 0.0)
        + np.sum(res.upper.marginals * 1.0)
    )
    z = normalize_pmf(
        [Fraction(float(v)) if v > 0 else Fraction(0) for v in res.x[: p.n_z]]
    )
    return LpSolution(
        status="optimal",
        objective=float(res.fun),
        z=z,
        t=res.x[p.n_z:],
        duality_gap=abs(float(res.fun) - float(dual)),
    )


@dataclass(frozen=True)
class TradeoffPoint:
    """One point on the optimal leakage/download frontier."""

    d_target: Fraction
    d_achieved: Fraction
    leakage_sum: Fraction
    leakage_bits: float
    leakage_normalized: float
    rate: Fraction
    z: tuple[Fraction, ...]


def _snap_to_rationals(z, table, cost_form, d_target):
    """Round z to nearby small-denominator rationals when that weakly
    improves the exact leakage without breaking the cost cap."""
    snapped = tuple(v.limit_denominator(_SNAP_DENOMINATOR) for v in z)
    total = sum(snapped)
    if total <= 0:
        return z
    snapped = tuple(v / total for v in snapped)
    if snapped == z:
        return z
    if cost_form.evaluate(snapped) > Fraction(d_target):
        return z
    if maxl(table, snapped).raw_sum > maxl(table, z).raw_sum:
        return z
    return snapped


def solve_tradeoff_point(
    tables, cost_form: LinearForm, d_target, lam: int, dim: int, two_stage: bool = True
):
    """Optimal leakage at one cost target, then (optionally) the cheapest
    cost achieving it.  Returns None when the target is infeasible."""
    table = _check_time_shared(tables)
    p = reformulate(tables, cost_form, d_target)
    sol = solve_lp(p)
    if not sol.is_optimal:
        return None
    if two_stage:
        sol2 = solve_lp(
            _with_leakage_cap(p, cost_form, sol.objective + LEAKAGE_CAP_SLACK)
        )
        if sol2.is_optimal:
            sol = sol2
    z = _snap_to_rationals(sol.z, table, cost_form, d_target)
    val = maxl(table, z)
    d_achieved = cost_form.evaluate(z)
    return TradeoffPoint(
        d_target=Fraction(d_target),
        d_achieved=d_achieved,
        leakage_sum=val.raw_sum,
        leakage_bits=val.bits,
        leakage_normalized=val.normalized,
        rate=Fraction(lam * dim) / d_achieved,
        z=z,
    )


def default_grid(cost_form: LinearForm, size: int, grid_size: int = 60):
    """Evenly spaced cost targets spanning the simplex extremes of D."""
    lo = cost_form.min_on_simplex(size)
    hi = cost_form.max_on_simplex(size)
    if grid_size < 2 or lo == hi:
        return [hi]
    return [lo + (hi - lo) * Fraction(i, grid_size - 1) for i in range(grid_size)]


def sweep_tradeoff(tables, cost_form, lam: int, dim: int, d_grid=None, grid_size: int = 60):
    """One TradeoffPoint per feasible target, deduplicated, sorted by rate."""
    table = _check_time_shared(tables)
    if d_grid is None:
        d_grid = default_grid(cost_form, table.alphabet_size, grid_size)
    points = []
    for d_target in d_grid:
        pt = solve_tradeoff_point(tables, cost_form, d_target, lam, dim)
        if pt is not None:
            points.append(pt)
    if not points:
        raise ValueError("every target in the sweep grid was infeasible")
    seen = set()
    unique = []
    for pt in sorted(points, key=lambda p: (p.rate, p.leakage_sum)):
        key = (round(pt.leakage_bits, 12), pt.rate)
        if key not in seen:
            seen.add(key)
            unique.append(pt)
    return unique


def _composition_chunks(total: int, size: int, chunk: int = _CHUNK):
    """Integer vectors of the given size summing to total, chunked."""
    if size == 1:
        yield np.array([[total]], dtype=np.int64)
        return
    buf = []
    for dividers in combinations(range(total + size - 1), size - 1):
        prev = -1
        row = []
        for d in dividers:
            row.append(d - prev - 1)
            prev = d
        row.append(total + size - 2 - prev)
        buf.append(row)
        if len(buf) == chunk:
            yield np.array(buf, dtype=np.int64)
            buf = []
    if buf:
        yield np.array(buf, dtype=np.int64)


def grid_point_count(total: int, size: int) -> int:
    return math.comb(total + size - 1, size - 1)


def brute_force_min_leakage(
    table: ConditionalQueryTable,
    cost_form: LinearForm,
    d_target,
    step: Fraction = Fraction(1, 50),
    guard: int = DEFAULT_GRID_GUARD,
):
    """Minimum leakage over a barycentric PMF grid under the cost cap.

    Returns (bits, argmin PMF); independent of the LP by construction.
    """
    step = Fraction(step)
    total = int(1 / step)
    if Fraction(1, total) != step:
        raise ValueError(f"step must divide 1 exactly, got {step}")
    size = table.alphabet_size
    count = grid_point_count(total, size)
    if count > guard:
        raise ResourceLimitError(
            f"grid has {count} points for |S|={size} at step {step}, budget {guard}"
        )
    cost_vec = np.array(
        [float(cost_form.coefficient(i)) for i in range(size)]
    )
    cost_cap = float(Fraction(d_target) - cost_form.constant) + 1e-9
    # per-m coefficient matrices, queries x strategies
    per_m = []
    for m in range(1, table.m_files + 1):
        mat = np.zeros((len(table.queries), size))
        for qi, q in enumerate(table.queries):
            for i, cf in table.prob_form(q, m).coeffs.items():
                mat[qi, i] = float(cf)
        per_m.append(mat)
    best_sum = None
    best_row = None
    for arr in _composition_chunks(total, size):
        z = arr / float(total)
        feasible = z @ cost_vec <= cost_cap
        if not feasible.any():
            continue
        zf = z[feasible]
        acc = per_m[0] @ zf.T
        for mat in per_m[1:]:
            np.maximum(acc, mat @ zf.T, out=acc)
        sums = acc.sum(axis=0)
        idx = int(np.argmin(sums))
        if best_sum is None or sums[idx] < best_sum:
            best_sum = float(sums[idx])
            best_row = arr[feasible][idx]
    if best_sum is None:
        raise ValueError(f"no grid point satisfies download cost <= {d_target}")
    z_best = tuple(Fraction(int(v), total) for v in best_row)
    # floats only picked the argmin; report its exact leakage
    exact = maxl(table, z_best).raw_sum
    return math.log2(exact), z_best
