import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from maskloop.formulation import MilpProblem, Solution, build_circular_model, check_feasibility
from maskloop.geo import instance_distances
from maskloop.instance import generate_synthetic
from maskloop.solver import (
    MAX_ORACLE_BINARIES,
    MilpStatus,
    SolveOptions,
    TooManyBinaries,
    UnboundedRelaxation,
    enumerate_oracle,
    solve_lp,
    solve_milp,
)


def milp(c, A, senses, b, integer, upper=None, maximize=True):
    n = len(c)
    upper = np.where(integer, 1.0, np.inf) if upper is None else np.asarray(upper, float)
    return MilpProblem(np.zeros(n), upper, np.asarray(integer, bool), sp.csr_matrix(np.atleast_2d(A)),
                       tuple(senses), b, c, maximize=maximize)


def test_two_binaries():
    p = milp([3, 2], [[1, 1]], ["<="], [1], [True, True])
    for solve in (solve_milp, enumerate_oracle):
        r = solve(p)
        assert r.optimal and r.objective == 3 and r.values.tolist() == [1, 0]


def test_integral_relaxation_needs_one_node():
    p = milp([1, 1], np.eye(2), ["<=", "<="], [1, 1], [True, True])
    r = solve_milp(p)
    assert r.optimal and r.nodes_explored == 1 and r.objective == 2


def test_knapsack_against_brute_force():
    w = np.array([12, 7, 11, 8, 9, 6, 5, 14])
    v = np.array([24, 13, 23, 15, 16, 11, 9, 30])
    p = milp(v, [w], ["<="], [30], [True] * 8)
    best = max(int(v @ np.array(bits)) for bits in np.ndindex(*(2,) * 8) if w @ np.array(bits) <= 30)
    r = solve_milp(p)
    assert r.optimal and r.objective == best
    assert enumerate_oracle(p).objective == best


def test_minimization_mixed():
    # min 5a + 3b + x  s.t. 2a + b + x >= 2.5, x <= 1
    p = milp([5, 3, 1], [[2, 1, 1]], [">="], [2.5], [True, True, False], upper=[1, 1, 1], maximize=False)
    r = solve_milp(p)
    assert r.optimal and r.objective == pytest.approx(5.5)
    assert enumerate_oracle(p).objective == pytest.approx(5.5)


def test_infeasible_root():
    p = milp([1, 1], [[1, 1]], [">="], [3], [True, True])
    r = solve_milp(p)
    assert r.status is MilpStatus.INFEASIBLE and r.values is None
    assert enumerate_oracle(p).status is MilpStatus.INFEASIBLE


def test_integer_infeasible_but_lp_feasible():
    p = milp([1, 1], [[2, 2]], ["="], [1], [True, True])
    assert solve_lp(p).optimal
    assert solve_milp(p).status is MilpStatus.INFEASIBLE


def test_unbounded_relaxation_raises():
    p = milp([1, 1], [[1, 0]], ["<="], [1], [True, False])
    with pytest.raises(UnboundedRelaxation):
        solve_milp(p)


def test_node_limit_keeps_incumbent_and_bound(toy23):
    inst, dist = toy23
    problem, _ = build_circular_model(inst, *dist, "Z1")
    full = solve_milp(problem)
    capped = solve_milp(problem, SolveOptions(node_limit=2))
    assert full.optimal
    if full.nodes_explored > 2:
        assert capped.status is MilpStatus.NODE_LIMIT and capped.nodes_explored == 2
        assert capped.best_bound >= full.objective - 1e-6 * abs(full.objective)


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(integrality_tol=0)
    with pytest.raises(ValueError):
        SolveOptions(node_limit=0)
    with pytest.raises(ValueError):
        SolveOptions(time_limit_seconds=-1)
    with pytest.raises(ValueError):
        SolveOptions(branching="random")


def test_time_limit_reports_gap_limit():
    inst = generate_synthetic(7, 8, 8, 1)
    problem, _ = build_circular_model(inst, *instance_distances(inst), "Z2")
    r = solve_milp(problem, SolveOptions(time_limit_seconds=1e-9))
    assert r.status is MilpStatus.GAP_LIMIT


@pytest.mark.parametrize("obj", ["Z1", "Z2", "Z3"])
def test_bound_trace_and_incumbent(obj, toy23):
    inst, dist = toy23
    problem, lay = build_circular_model(inst, *dist, obj)
    r = solve_milp(problem)
    assert r.optimal
    trace = np.array(r.bound_trace)
    assert np.all(np.diff(trace) <= 1e-9 * np.maximum(1.0, np.abs(trace[1:])))
    assert np.all(trace >= r.objective - 1e-6 * max(1.0, abs(r.objective)))
    assert r.gap <= 1e-6
    b = r.values[problem.integer]
    assert np.all(np.abs(b - np.round(b)) <= 1e-6)
    assert check_feasibility(inst, *dist, Solution(lay, r.values)) == []


def test_deterministic_runs(toy23):
    inst, dist = toy23
    problem, _ = build_circular_model(inst, *dist, "Z2")
    a, b = solve_milp(problem), solve_milp(problem)
    assert a.nodes_explored == b.nodes_explored
    assert np.array_equal(a.values, b.values)
    assert a.bound_trace == b.bound_trace


@pytest.mark.parametrize("opts", [SolveOptions(use_priority=False), SolveOptions(branching="fractional"),
                                  SolveOptions(use_priority=False, branching="fractional")])
def test_branching_rules_agree(toy23, opts):
    inst, dist = toy23
    problem, _ = build_circular_model(inst, *dist, "Z1", eps3=float(sum(s.jobs_collection for s in inst.sites)))
    a = solve_milp(problem)
    b = solve_milp(problem, opts)
    assert a.status == b.status
    if a.optimal:
        assert a.objective == pytest.approx(b.objective, rel=1e-6)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([(2, 2), (2, 3), (3, 2)]), st.sampled_from(["Z1", "Z2", "Z3"]))
def test_oracle_equivalence_small_models(seed, dims, obj):
    inst = generate_synthetic(seed, dims[0], dims[1], 1)
    problem, _ = build_circular_model(inst, *instance_distances(inst), obj)
    assert int(problem.integer.sum()) <= MAX_ORACLE_BINARIES
    a, b = solve_milp(problem), enumerate_oracle(problem)
    assert a.status == b.status
    if b.optimal:
        assert a.objective == pytest.approx(b.objective, rel=1e-6, abs=1e-9)


def test_oracle_without_binaries_equals_lp():
    p = milp([1, 2], [[1, 1]], ["<="], [3], [False, False], upper=[2, 2])
    o, lp = enumerate_oracle(p), solve_lp(p)
    assert o.optimal and o.objective == lp.objective == 5 and o.nodes_explored == 1


def test_oracle_cap():
    n = MAX_ORACLE_BINARIES + 1
    p = milp(np.ones(n), [np.ones(n)], ["<="], [3], [True] * n)
    with pytest.raises(TooManyBinaries):
        enumerate_oracle(p)


def test_oracle_matches_bnb_on_random_milps():
    for seed in range(100):
        g = np.random.default_rng(seed)
        nb, nc, m = int(g.integers(1, 7)), int(g.integers(0, 3)), int(g.integers(1, 4))
        n = nb + nc
        A = g.integers(-3, 6, (m, n)).astype(float)
        b = g.integers(1, 10, m).astype(float)
        c = g.integers(-4, 8, n).astype(float)
        upper = np.concatenate([np.ones(nb), g.integers(1, 4, nc).astype(float)])
        p = milp(c, A, ["<="] * m, b, [True] * nb + [False] * nc, upper=upper)
        a, o = solve_milp(p), enumerate_oracle(p)
        assert a.status == o.status, seed
        if o.optimal:
            assert a.objective == pytest.approx(o.objective, rel=1e-6, abs=1e-9), seed
