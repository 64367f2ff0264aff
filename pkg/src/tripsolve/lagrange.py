"""Multiplier relaxation of the budget constraint.

Moving the budget constraint into the objective at price lam turns the
problem into an unconstrained shortest path on the quotient graph with edge
weights increased by lam times the edge consumption. The relaxed optimum
lower-bounds the constrained one for every lam >= 0, and the cost-to-sink
tables of the relaxed graphs combine into a consistent A* heuristic.

A bisection over lam locates a near-optimal multiplier: relaxed paths that
overuse the budget push the bracket up, paths within budget push it down and
double as feasible incumbents, and a path hitting the budget exactly proves
its own optimality, ending the search outright.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .graph import NodeRef
from .instance import (
    Solution,
    SolverStats,
    TripInstance,
    objective,
    resource_use,
)

# Cost comparisons treat differences below this as ties so that the
# smallest-budget path among equal-cost paths is selected reproducibly.
COST_TIE_TOL = 1e-12


@dataclass(frozen=True)
class ZetaTable:
    """Cost-to-sink data of one relaxed quotient graph.

    cost[i - 1, j] is the cheapest relaxed cost from the layer-i node with
    value index j to the sink; res holds the smallest budget use among those
    cheapest paths and choice the successor index realizing the pair.
    source_* carry the same data for the source node.
    """

    lam: float
    cost: np.ndarray  # (n, m) float
    res: np.ndarray  # (n, m) int
    choice: np.ndarray  # (n, m) int, -1 in the last layer
    source_cost: float
    source_res: int
    source_choice: int


@dataclass
class LagrangeTables:
    """Everything the bisection produced: evaluated multipliers with their
    cost-to-sink tables, the best feasible incumbent, and, when a relaxed
    path met the budget exactly, the proven optimum."""

    inst: TripInstance
    lambdas: list[float] = field(default_factory=list)
    zeta: list[ZetaTable] = field(default_factory=list)
    upper_bound: float = math.inf
    incumbent: Optional[Solution] = None
    early_exit: Optional[Solution] = None
    lambda_star: float = 0.0
    iterations: int = 0  # bisection steps, endpoint evaluations excluded
    log: list[tuple[float, float, int]] = field(default_factory=list)

    def heuristic(self, node: NodeRef) -> float:
        return heuristic_h(self.inst, self, node)

    def dual_bound(self) -> float:
        """Best lower bound on the constrained optimum over all multipliers."""
        return max(
            t.source_cost - t.lam * self.inst.delta for t in self.zeta
        )

    def debug_csv(self) -> str:
        """One "lambda,dual_value,path_resource" line per evaluation."""
        out = io.StringIO()
        out.write("lambda,dual_value,path_resource\n")
        for lam, dual, res in self.log:
            out.write(f"{lam!r},{dual!r},{res}\n")
        return out.getvalue()


def _lex_min_rows(
    total: np.ndarray, res_row: np.ndarray, tol: float = COST_TIE_TOL
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-row minimum of (cost, budget) pairs, cost ties within tol broken
    by the smaller budget, remaining ties by the smaller column index.

    total: (m, k) costs; res_row: (k,) budgets shared by all rows.
    Returns (chosen index, chosen cost, chosen budget) per row.
    """
    cmin = total.min(axis=1, keepdims=True)
    tied = total <= cmin + tol
    res_masked = np.where(tied, res_row[None, :], np.iinfo(np.int64).max)
    rmin = res_masked.min(axis=1)
    idx = (tied & (res_masked == rmin[:, None])).argmax(axis=1)
    rows = np.arange(total.shape[0])
    return idx, total[rows, idx], rmin


def relaxed_costs_to_sink(inst: TripInstance, lam: float) -> ZetaTable:
    """Backward sweep over the quotient graph with weights increased by
    lam times the edge consumption."""
    n, m = inst.n, inst.m
    cost = np.zeros((n, m))
    res = np.zeros((n, m), dtype=np.int64)
    choice = np.full((n, m), -1, dtype=np.int64)
    # last layer: only the zero-weight, zero-consumption sink edge
    shifts_head = inst.shifts(n)
    for i in range(n - 1, 0, -1):
        shifts_tail = inst.shifts(i)
        cons_head = inst.gamma[i] * np.abs(shifts_head)
        jump = np.abs(
            int(inst.x[i]) - int(inst.x[i - 1])
            + shifts_head[None, :]
            - shifts_tail[:, None]
        )
        weight = inst.c[i] * shifts_head[None, :] + inst.alpha * jump
        total = weight + lam * cons_head[None, :] + cost[i][None, :]
        res_thru = cons_head + res[i]
        idx, cost[i - 1], res[i - 1] = _lex_min_rows(total, res_thru)
        choice[i - 1] = idx
        shifts_head = shifts_tail
    shifts1 = inst.shifts(1)
    cons1 = inst.gamma[0] * np.abs(shifts1)
    total_s = (inst.c[0] * shifts1 + lam * cons1 + cost[0])[None, :]
    res_s = cons1 + res[0]
    idx, cost_s, res_min = _lex_min_rows(total_s, res_s)
    return ZetaTable(
        lam=float(lam),
        cost=cost,
        res=res,
        choice=choice,
        source_cost=float(cost_s[0]),
        source_res=int(res_min[0]),
        source_choice=int(idx[0]),
    )


def extract_path_step(inst: TripInstance, table: ZetaTable) -> np.ndarray:
    """Step vector of the relaxed shortest path encoded in a table's
    successor choices."""
    d = np.zeros(inst.n, dtype=np.int64)
    j = table.source_choice
    for i in range(1, inst.n + 1):
        d[i - 1] = int(inst.xi[j] - inst.x[i - 1])
        if i < inst.n:
            j = int(table.choice[i - 1, j])
    return d


def relaxed_objective(inst: TripInstance, d: np.ndarray, lam: float) -> float:
    """Step cost plus lam times the budget overshoot (negative when under)."""
    d = np.asarray(d, dtype=np.int64)
    overshoot = int(np.dot(inst.gamma, np.abs(d))) - inst.delta
    return objective(inst, d) + lam * overshoot


def _solution_from_step(
    inst: TripInstance, d: np.ndarray, iterations: int
) -> Solution:
    return Solution(
        d=d,
        objective=objective(inst, d),
        resource=resource_use(inst, d),
        stats=SolverStats(preprocessing_iterations=iterations),
    )


def binary_search(inst: TripInstance, epsilon: float) -> LagrangeTables:
    """Bisection for a multiplier within epsilon of an optimal one.

    The multiplier 0 is evaluated first: if its cheapest path (smallest
    budget use among cost ties) already fits the budget it is optimal and
    the search exits. The initial upper endpoint max|c| + 2*alpha is
    evaluated next; there the zero step is relaxed-optimal, which seeds the
    feasible incumbent. Each bisection step then keeps every optimal
    multiplier bracketed: budget overshoot raises the lower end, slack
    lowers the upper end and updates the incumbent, an exact budget hit is
    returned as the proven optimum.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    tables = LagrangeTables(inst=inst)
    upper0 = float(np.max(np.abs(inst.c))) + 2.0 * inst.alpha

    def evaluate(lam: float) -> tuple[ZetaTable, np.ndarray, int]:
        table = relaxed_costs_to_sink(inst, lam)
        tables.lambdas.append(table.lam)
        tables.zeta.append(table)
        d = extract_path_step(inst, table)
        tables.log.append(
            (table.lam, table.source_cost - lam * inst.delta, table.source_res)
        )
        return table, d, table.source_res

    def note_feasible(d: np.ndarray) -> None:
        value = objective(inst, d)
        if value < tables.upper_bound:
            tables.upper_bound = value
            tables.incumbent = _solution_from_step(inst, d, tables.iterations)

    def finish(lam_star: float, optimal: Optional[np.ndarray]) -> LagrangeTables:
        tables.lambda_star = lam_star
        if optimal is not None:
            tables.early_exit = _solution_from_step(
                inst, optimal, tables.iterations
            )
        order = np.argsort(tables.lambdas)
        tables.lambdas = [tables.lambdas[k] for k in order]
        tables.zeta = [tables.zeta[k] for k in order]
        return tables

    _, d0, res0 = evaluate(0.0)
    if res0 <= inst.delta:
        # the unconstrained optimum fits the budget: done
        return finish(0.0, d0)

    _, d_up, res_up = evaluate(upper0)
    if res_up > inst.delta:  # cannot happen: the zero step is optimal here
        raise AssertionError("relaxed path at the upper endpoint overuses budget")
    if res_up == inst.delta:
        return finish(upper0, d_up)
    note_feasible(d_up)

    lo, hi = 0.0, upper0
    lam = hi
    while hi - lo >= epsilon:
        lam = 0.5 * (lo + hi)
        tables.iterations += 1
        _, d, res = evaluate(lam)
        if res > inst.delta:
            lo = lam
        elif res == inst.delta:
            return finish(lam, d)
        else:
            hi = lam
            note_feasible(d)
    return finish(lam, None)


def heuristic_h(inst: TripInstance, tables: LagrangeTables, node: NodeRef) -> float:
    """Consistent cost-to-go estimate: the best lower bound over all
    evaluated multipliers, -lam * capacity + cost-to-sink."""
    if node.layer == inst.n + 1:
        return 0.0
    if node.layer == 0:
        return max(
            t.source_cost - t.lam * node.capacity for t in tables.zeta
        )
    return max(
        t.cost[node.layer - 1, node.value_index] - t.lam * node.capacity
        for t in tables.zeta
    )


def heuristic_table(
    inst: TripInstance, tables: LagrangeTables
) -> np.ndarray:
    """Dense heuristic lookup H[layer - 1, value_index, capacity] for the
    inner layers 1..n; worthwhile when the state space fits in memory."""
    n, m, width = inst.n, inst.m, inst.delta + 1
    caps = np.arange(width, dtype=np.float64)
    h = np.full((n, m, width), -np.inf)
    for t in tables.zeta:
        np.maximum(h, t.cost[:, :, None] - t.lam * caps[None, None, :], out=h)
    return h


def default_epsilon(inst: TripInstance) -> float:
    """Preprocessing tolerance scaled to the cost magnitude."""
    return 1e-6 * (1.0 + float(np.max(np.abs(inst.c))))
