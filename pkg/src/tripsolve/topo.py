"""Exact solver by dynamic programming in layer order.

Processes every reachable (layer, value, remaining budget) state exactly
once, so the running time is linear in the graph size, i.e. proportional to
n * delta * |xi|^2. The cost tables roll layer by layer; only the
predecessor choices are kept for the whole horizon so the optimal step can
be reconstructed.
"""

from __future__ import annotations

import time

import numpy as np

from .instance import Solution, SolverStats, TripInstance, clamp_delta, objective

_INF = np.inf


def solve_topo(inst: TripInstance) -> Solution:
    """Globally optimal step vector by layer-ordered dynamic programming.

    Among minimum-cost terminal states the one with the smallest budget use
    wins, then the smallest value index; predecessor ties prefer the smaller
    value index. This makes the result deterministic.
    """
    t0 = time.perf_counter()
    inst = clamp_delta(inst)
    n, m, width = inst.n, inst.m, inst.delta + 1

    pred_dtype = np.int8 if m <= np.iinfo(np.int8).max else np.int16
    pred = np.full((n, m, width), -1, dtype=pred_dtype)

    shifts = inst.shifts(1)
    cons = inst.gamma[0] * np.abs(shifts)
    cost = np.full((m, width), _INF)
    reachable = cons <= inst.delta
    cost[reachable, (inst.delta - cons)[reachable]] = inst.c[0] * shifts[reachable]

    nodes = int(reachable.sum())
    edges = int(reachable.sum())  # source out-edges

    for head in range(2, n + 1):
        shifts_v = inst.shifts(head)
        cons_v = inst.gamma[head - 1] * np.abs(shifts_v)
        jump = np.abs(
            int(inst.x[head - 1]) - int(inst.x[head - 2])
            + shifts_v[None, :]
            - shifts[:, None]
        )
        weight = inst.c[head - 1] * shifts_v[None, :] + inst.alpha * jump

        # stacked[j', j, eta] = cost of reaching (head-1, j, eta) + edge to j'
        stacked = cost[None, :, :] + weight.T[:, :, None]
        best_prev = stacked.argmin(axis=1)  # smallest value index on ties
        arrived = stacked.min(axis=1)

        finite_prev = np.isfinite(cost)
        edges += int(
            np.searchsorted(np.sort(cons_v), np.nonzero(finite_prev)[1], side="right").sum()
        )

        new_cost = np.full((m, width), _INF)
        for j in range(m):
            used = int(cons_v[j])
            if used >= width:
                continue
            span = width - used
            new_cost[j, :span] = arrived[j, used:]
            pred[head - 1, j, :span] = best_prev[j, used:]
        cost = new_cost
        shifts = shifts_v
        nodes += int(np.isfinite(cost).sum())

    edges += int(np.isfinite(cost).sum())  # sink edges
    nodes += 2  # source and sink

    best_value = cost.min()
    ties = np.argwhere(cost == best_value)
    order = np.lexsort((ties[:, 0], -ties[:, 1]))  # max capacity, then min index
    j_best, eta_best = (int(v) for v in ties[order[0]])

    d = np.zeros(n, dtype=np.int64)
    j, eta = j_best, eta_best
    for i in range(n, 0, -1):
        shift = int(inst.xi[j] - inst.x[i - 1])
        d[i - 1] = shift
        j_prev = int(pred[i - 1, j, eta]) if i > 1 else -1
        eta += int(inst.gamma[i - 1]) * abs(shift)  # capacity one layer back
        j = j_prev

    return Solution(
        d=d,
        objective=objective(inst, d),
        resource=inst.delta - eta_best,
        stats=SolverStats(
            nodes_expanded=nodes,
            nodes_generated=edges,
            wall_seconds=time.perf_counter() - t0,
        ),
    )
