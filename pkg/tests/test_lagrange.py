import itertools
import math

import numpy as np
import pytest

from tripsolve.graph import build_explicit, sink_node
from tripsolve.instance import objective, validate
from tripsolve.lagrange import (
    COST_TIE_TOL,
    LagrangeTables,
    binary_search,
    extract_path_step,
    heuristic_h,
    heuristic_table,
    relaxed_costs_to_sink,
    relaxed_objective,
)
from tripsolve.oracle import enumerate_steps, gen_random
from tripsolve.topo import solve_topo


def suffix_oracle(inst, lam, layer, value_index):
    """Exhaustive (cost, min budget among tied costs) over all continuations
    from a given (layer, value) class to the sink."""
    shifts = [inst.shifts(i) for i in range(layer + 1, inst.n + 1)]
    best = (math.inf, math.inf)
    prev_value = int(inst.xi[value_index])
    for tail in itertools.product(*shifts) if shifts else [()]:
        cost = 0.0
        res = 0
        prev = prev_value
        for k, shift in enumerate(tail):
            i = layer + 1 + k  # 1-based layer of this step
            value = int(inst.x[i - 1]) + int(shift)
            used = int(inst.gamma[i - 1]) * abs(int(shift))
            cost += inst.c[i - 1] * shift + inst.alpha * abs(value - prev)
            cost += lam * used
            res += used
            prev = value
        if cost < best[0] - COST_TIE_TOL or (
            cost <= best[0] + COST_TIE_TOL and res < best[1]
        ):
            best = (min(cost, best[0]), res)
    return best


def dual_grid(inst, lambdas):
    """Relaxed optimum -lam*delta + min over paths of (cost + lam*budget),
    evaluated for a whole grid of multipliers at once by enumeration."""
    steps = enumerate_steps(inst)
    cost = steps @ inst.c + inst.alpha * np.abs(
        np.diff(inst.x[None, :] + steps, axis=1)
    ).sum(axis=1)
    res = np.abs(steps) @ inst.gamma
    lam = np.asarray(lambdas)
    relaxed = cost[None, :] + lam[:, None] * (res - inst.delta)[None, :]
    return relaxed.min(axis=1)


def small_instances(count, seed=100, max_n=6):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(1, max_n + 1))
        m = int(rng.integers(1, 4))
        delta = int(rng.integers(0, 6))
        alpha = float(rng.choice([0.0, 0.2, 1.0]))
        out.append(gen_random(n, m, delta, alpha, seed=seed + k))
    return out


def test_zeta_last_layer_zero(derived3):
    table = relaxed_costs_to_sink(derived3, 0.7)
    assert np.all(table.cost[-1] == 0.0)
    assert np.all(table.res[-1] == 0)


def test_zeta_zero_costs_zero_penalty():
    inst = validate(
        {
            "n": 4,
            "alpha": 0.0,
            "delta": 3,
            "xi": [0, 1, 2],
            "x": [0, 1, 2, 0],
            "gamma": [1, 1, 1, 1],
            "c": [0.0] * 4,
        }
    )
    table = relaxed_costs_to_sink(inst, 0.9)
    assert np.all(table.cost == 0.0)
    assert np.all(table.res == 0)  # the zero continuation wins the tie


def test_zeta_matches_suffix_enumeration(derived3):
    for lam in (0.0, 0.3, 1.0, 4.0):
        table = relaxed_costs_to_sink(derived3, lam)
        for layer in range(1, derived3.n + 1):
            for j in range(derived3.m):
                cost, res = suffix_oracle(derived3, lam, layer, j)
                assert table.cost[layer - 1, j] == pytest.approx(cost, abs=1e-9)
                assert table.res[layer - 1, j] == res


def test_zeta_derived_value_at_zero():
    # frozen from the suffix enumeration: continuing after a unit shift on
    # the first interval costs 0.0 at multiplier 0, via the (0, 1) tail
    inst = validate(
        {
            "n": 3,
            "alpha": 0.5,
            "delta": 2,
            "xi": [0, 1],
            "x": [0, 0, 0],
            "gamma": [1, 1, 1],
            "c": [-1.0, 2.0, -1.0],
        }
    )
    assert suffix_oracle(inst, 0.0, 1, 1) == (0.0, 1)
    table = relaxed_costs_to_sink(inst, 0.0)
    assert table.cost[0, 1] == pytest.approx(0.0, abs=1e-12)
    assert table.res[0, 1] == 1


def test_zeta_random_instances():
    for inst in small_instances(25, seed=300):
        for lam in (0.0, 0.5, 2.0):
            table = relaxed_costs_to_sink(inst, lam)
            for j in range(inst.m):
                cost, res = suffix_oracle(inst, lam, 1, j)
                assert table.cost[0, j] == pytest.approx(cost, abs=1e-9)
                assert table.res[0, j] == res


def test_extracted_path_minimizes_resource_among_ties():
    for inst in small_instances(40, seed=400):
        for lam in (0.0, 0.25, 1.5):
            table = relaxed_costs_to_sink(inst, lam)
            steps = enumerate_steps(inst)
            cost = steps @ inst.c + inst.alpha * np.abs(
                np.diff(inst.x[None, :] + steps, axis=1)
            ).sum(axis=1)
            res = np.abs(steps) @ inst.gamma
            total = cost + lam * res
            tied = total <= total.min() + COST_TIE_TOL
            want_res = res[tied].min()
            d = extract_path_step(inst, table)
            got_res = int(np.abs(d) @ inst.gamma)
            assert got_res == want_res
            assert table.source_res == want_res


def test_relaxed_objective_basics(derived3):
    d = np.array([1, 0, 1])
    assert relaxed_objective(derived3, d, 0.0) == objective(derived3, d)
    # budget used exactly: the penalty vanishes for every multiplier
    for lam in (0.0, 0.7, 3.0):
        assert relaxed_objective(derived3, d, lam) == pytest.approx(
            objective(derived3, d)
        )


def test_relaxed_zero_step_wins_at_large_multiplier():
    for inst in small_instances(20, seed=500):
        lam = float(np.max(np.abs(inst.c))) + 2.0 * inst.alpha
        steps = enumerate_steps(inst)
        values = [relaxed_objective(inst, d, lam) for d in steps]
        zero = relaxed_objective(inst, np.zeros(inst.n, dtype=int), lam)
        assert zero <= min(values) + 1e-9


def test_binary_search_initial_upper_endpoint():
    inst = validate(
        {
            "n": 2,
            "alpha": 0.5,
            "delta": 1,
            "xi": [0, 1],
            "x": [0, 0],
            "gamma": [1, 1],
            "c": [-3.0, -2.0],
        }
    )
    tables = binary_search(inst, epsilon=1e-6)
    assert max(tables.lambdas) == pytest.approx(3.0 + 2 * 0.5)  # max|c| + 2 alpha


def test_binary_search_zero_cost_early_exit():
    # constant control, zero costs: the zero step is the unconstrained
    # optimum, so the search exits at multiplier 0 with cost alpha * TV(x)
    inst = validate(
        {
            "n": 3,
            "alpha": 0.5,
            "delta": 2,
            "xi": [0, 1],
            "x": [1, 1, 1],
            "gamma": [1, 1, 1],
            "c": [0.0, 0.0, 0.0],
        }
    )
    tables = binary_search(inst, epsilon=1e-6)
    assert tables.early_exit is not None
    assert np.array_equal(tables.early_exit.d, np.zeros(3))
    assert tables.early_exit.objective == pytest.approx(0.0)  # alpha * TV(x)
    assert tables.iterations == 0
    assert tables.lambda_star == 0.0
    assert 0.0 in tables.lambdas

    # zero costs with removable jumps: still exits at multiplier 0, but the
    # extracted optimum flattens the control instead of standing still
    bumpy = validate(
        {
            "n": 3,
            "alpha": 0.5,
            "delta": 2,
            "xi": [0, 1],
            "x": [0, 1, 0],
            "gamma": [1, 1, 1],
            "c": [0.0, 0.0, 0.0],
        }
    )
    tables = binary_search(bumpy, epsilon=1e-6)
    assert tables.early_exit is not None
    assert tables.early_exit.objective == pytest.approx(
        solve_topo(bumpy).objective, abs=1e-12
    )


def test_binary_search_iteration_bound_and_accuracy():
    grid = np.arange(0.0, 1.0, 1.0)  # placeholder, rebuilt per instance
    for inst in small_instances(60, seed=600):
        eps = 1e-5
        tables = binary_search(inst, epsilon=eps)
        upper0 = float(np.max(np.abs(inst.c))) + 2 * inst.alpha
        bound = math.ceil(math.log2(max(upper0 / eps, 1.0))) + 1
        assert tables.iterations <= bound
        if tables.early_exit is not None:
            topo = solve_topo(inst)
            assert tables.early_exit.objective == pytest.approx(
                topo.objective, abs=1e-9
            )
            continue
        grid = np.arange(0.0, upper0 + 1e-4, 1e-4)
        dual = dual_grid(inst, grid)
        best = dual.max()
        maximizers = grid[dual >= best - 1e-12]
        dist = np.min(np.abs(maximizers - tables.lambda_star))
        assert dist <= eps + 1e-4 + 1e-9


def test_binary_search_bracket_invariant():
    # replay the evaluation log and check a certified maximizer stays inside
    for inst in small_instances(30, seed=700):
        eps = 1e-4
        tables = binary_search(inst, epsilon=eps)
        upper0 = float(np.max(np.abs(inst.c))) + 2 * inst.alpha
        grid = np.arange(0.0, upper0 + 1e-4, 1e-4)
        dual = dual_grid(inst, grid)
        certified = grid[np.argmax(dual)]
        lo, hi = 0.0, upper0
        for lam, _, res in tables.log:
            if res > inst.delta:
                lo = lam
            elif res == inst.delta:
                break
            else:
                hi = lam
            assert lo - 1e-9 - 1e-4 <= certified <= hi + 1e-9 + 1e-4
        assert tables.upper_bound >= tables.dual_bound() - 1e-9


def test_dual_lower_bound(corpus200):
    for inst in corpus200[:40]:
        tables = binary_search(inst, epsilon=1e-6)
        topo = solve_topo(inst)
        for table in tables.zeta:
            lower = table.source_cost - table.lam * inst.delta
            assert lower <= topo.objective + 1e-9


def test_lemma_large_multiplier_matches_zero_step():
    for inst in small_instances(40, seed=800):
        lam = float(np.max(np.abs(inst.c))) + 2.0 * inst.alpha
        table = relaxed_costs_to_sink(inst, lam)
        want = relaxed_objective(inst, np.zeros(inst.n, dtype=int), lam)
        got = table.source_cost - lam * inst.delta
        assert got == pytest.approx(want, abs=1e-9)


def test_heuristic_consistency_exhaustive():
    for inst in small_instances(25, seed=900):
        tables = binary_search(inst, epsilon=1e-6)
        graph = build_explicit(inst)
        h = [heuristic_h(inst, tables, v) for v in graph.nodes]
        assert heuristic_h(inst, tables, sink_node(inst)) == 0.0
        for u, v, w, _ in graph.edges():
            assert w + h[v] - h[u] >= -1e-9


def test_heuristic_table_matches_pointwise(derived3):
    tables = binary_search(derived3, epsilon=1e-3)
    dense = heuristic_table(derived3, tables)
    graph = build_explicit(derived3)
    for node in graph.nodes:
        if 1 <= node.layer <= derived3.n:
            assert dense[
                node.layer - 1, node.value_index, node.capacity
            ] == pytest.approx(heuristic_h(derived3, tables, node), abs=1e-12)


def test_early_exit_matches_topo(corpus200):
    exits = 0
    for inst in corpus200:
        tables = binary_search(inst, epsilon=1e-6)
        if tables.early_exit is None:
            continue
        exits += 1
        topo = solve_topo(inst)
        assert tables.early_exit.objective == pytest.approx(
            topo.objective, abs=1e-9
        )
        assert tables.early_exit.resource <= inst.delta
    assert exits > 0  # the corpus must exercise the exit path


def test_debug_csv_has_one_line_per_evaluation(derived3):
    tables = binary_search(derived3, epsilon=1e-6)
    lines = tables.debug_csv().strip().splitlines()
    assert lines[0] == "lambda,dual_value,path_resource"
    assert len(lines) - 1 == len(tables.lambdas)


def test_epsilon_must_be_positive(derived3):
    with pytest.raises(ValueError):
        binary_search(derived3, epsilon=0.0)
