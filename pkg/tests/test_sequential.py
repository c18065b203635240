import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import bisect_root, explicit, graph
from outlierfl import DistanceOracle, InfeasibleError, StructuralError
from outlierfl.harness.generators import tiny_instance
from outlierfl.oracle import opt_penalty, opt_plain, opt_robust
from outlierfl.sequential import (
    RadiusTable,
    greedy_open,
    mettu_plaxton,
    penalty_facloc,
    penalty_radius,
    penalty_surplus,
    plain_radius,
    plain_surplus,
    radius_table,
    robust_facloc,
    robust_facloc_trials,
    solve_radius_penalty,
    solve_radius_plain,
)


def test_radius_zero_cost():
    assert plain_radius(0.0, [3, 4]) == 0.0


def test_radius_single_piece():
    assert plain_radius(3.0, [0.0]) == 3.0


def test_radius_two_clients():
    assert plain_radius(2.0, [0.0, 1.0]) == pytest.approx(1.5)
    assert bisect_root(lambda r: plain_surplus(r, [0, 1]), 2.0) == pytest.approx(1.5, rel=1e-9)


def test_radius_infinite_cost_rejected():
    with pytest.raises(StructuralError):
        plain_radius(math.inf, [1.0])


def test_radius_through_instance():
    inst = explicit([2.0], [[0.0, 1.0]])
    assert solve_radius_plain(inst, 0) == pytest.approx(1.5)


def test_penalty_radius_removed():
    assert math.isinf(penalty_radius(5.0, [0.0], [2.0]))


def test_penalty_radius_caps_inactive():
    d = np.array([0.0, 2.0, 5.0])
    assert penalty_radius(4.0, d, d + 100) == pytest.approx(plain_radius(4.0, d))


def test_penalty_radius_capped_client():
    r = penalty_radius(2.0, [0.0, 1.0], [1.2, 10.0])
    assert r == pytest.approx(1.8)
    assert bisect_root(lambda x: penalty_surplus(x, [0, 1], [1.2, 10]), 2.0) == pytest.approx(1.8, rel=1e-9)


def test_penalty_radius_exact_cap_is_finite():
    assert penalty_radius(2.0, [0.0], [2.0]) == pytest.approx(2.0)


def test_penalty_radius_through_instance():
    inst = explicit([2.0], [[0.0, 1.0]], "penalty", penalties=[1.2, 10])
    assert solve_radius_penalty(inst, 0) == pytest.approx(1.8)


@settings(max_examples=300, deadline=None)
@given(
    f=st.floats(0, 1e4),
    d=st.lists(st.floats(0, 1e3), min_size=1, max_size=12),
)
def test_plain_radius_residual_and_minimality(f, d):
    r = plain_radius(f, d)
    assert abs(plain_surplus(r, d) - f) <= 1e-9 * max(1.0, f)
    if f > 0:
        # step back by an amount that is representable even for tiny radii
        assert plain_surplus(r - max(1e-7 * r, 1e-300), d) < f


@settings(max_examples=300, deadline=None)
@given(
    f=st.floats(0, 100),
    pairs=st.lists(st.tuples(st.floats(0, 50), st.floats(0, 80)), min_size=1, max_size=12),
)
def test_penalty_radius_residual(f, pairs):
    d = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    r = penalty_radius(f, d, p)
    cap = sum(max(b - a, 0) for a, b in pairs)
    if cap < f:
        assert math.isinf(r)
    else:
        assert abs(penalty_surplus(r, d, p) - f) <= 1e-9 * max(1.0, f)
        ref = bisect_root(lambda x: penalty_surplus(x, d, p), f)
        assert r == pytest.approx(ref, rel=1e-6, abs=1e-9)


def two_facilities(gap):
    # facility vertices 0 and 1 joined directly; one client hangs off facility 0
    return graph(2, 1, [[0, 1, gap], [0, 2, 5]])


def test_greedy_closes_within_two_r():
    o = DistanceOracle(two_facilities(2.5).metric)
    tr = greedy_open(RadiusTable(np.array([1.0, 1.5])), o)
    assert tr.opened == [0] and tr.closed_by == {1: 0}


def test_greedy_opens_when_far():
    o = DistanceOracle(two_facilities(4.0).metric)
    assert greedy_open(RadiusTable(np.array([1.0, 1.5])), o).opened == [0, 1]


def test_greedy_single_facility():
    o = DistanceOracle(explicit([1], [[3]]).metric)
    assert greedy_open(RadiusTable(np.array([7.0])), o).opened == [0]


def test_greedy_served_sets_use_current_radius():
    # client 0 is 2 away from facility 0 (r=1) and 5 from facility 1 (r=3)
    inst = explicit([1, 1], [[2], [5]])
    o = DistanceOracle(inst.metric)
    tr = greedy_open(RadiusTable(np.array([1.0, 3.0])), o)
    assert tr.served_after(0) == frozenset()
    # within r=3 of the already processed facility 0
    assert tr.served_after(1) == {0}


def test_greedy_stop_predicate():
    inst = explicit([1, 1, 1], [[0, 9, 9], [9, 0, 9], [9, 9, 0]])
    tr = greedy_open(RadiusTable(np.array([1.0, 2.0, 3.0])), DistanceOracle(inst.metric),
                     stop=lambda s: s.sum() >= 1)
    assert tr.processed == 1


@pytest.mark.parametrize("seed", range(40))
def test_greedy_separation_invariant(seed):
    inst = tiny_instance(seed, "plain", max_f=8, max_c=6)
    o = DistanceOracle(inst.metric)
    rt = radius_table(inst)
    tr = greedy_open(rt, o)
    pos = {i: k for k, i in enumerate(tr.order)}
    ff = inst.metric.ff
    for a in tr.opened:
        for b in tr.opened:
            if pos[a] < pos[b]:
                assert ff[a, b] > 2 * rt.radii[b]
    for i, o_ in tr.closed_by.items():
        assert ff[i, o_] <= 2 * rt.radii[i]
    assert all(rt.radii[tr.order[k]] <= rt.radii[tr.order[k + 1]] for k in range(len(tr.order) - 1))


def test_robust_p_zero():
    inst = explicit([3, 5], [[1, 2], [2, 1]], "robust", coverage=0)
    sol = robust_facloc(inst, 0.1)
    assert sol.served == frozenset() and sol.cost == 0.0
    assert opt_robust(inst).opt_cost == 0.0


def test_robust_full_coverage_colocated_free():
    inst = explicit([0, 4], [[0, 0, 0], [3, 3, 3]], "robust", coverage=3)
    assert robust_facloc(inst, 0.1).cost == 0.0


def test_robust_two_facility_example():
    inst = explicit([1, 4], [[0, 5], [5, 0]], "robust", coverage=1)
    sol = robust_facloc(inst, 0.01)
    assert sol.cost == 1.0 and sol.cost <= 5.02 * opt_robust(inst).opt_cost


def test_robust_infeasible_coverage():
    inst = graph(1, 3, [[0, 1, 1], [1, 2, 1]], f=[1], variant="robust", coverage=3)
    with pytest.raises(InfeasibleError):
        robust_facloc(inst, 0.1)


def test_robust_variant_check():
    with pytest.raises(StructuralError):
        robust_facloc(explicit([1], [[1]]), 0.1)


@pytest.mark.parametrize("seed", range(60))
def test_robust_serves_exactly_p(seed):
    inst = tiny_instance(seed, "robust")
    for t in robust_facloc_trials(inst, 0.1):
        if t.solution is not None:
            assert len(t.solution.served) == inst.coverage
            assert t.solution.served | t.solution.outliers == frozenset(inst.clients)


def test_penalty_all_zero():
    inst = explicit([1, 2], [[1, 2], [3, 1]], "penalty", penalties=[0, 0])
    sol = penalty_facloc(inst)
    assert sol.served == frozenset() and sol.cost == sum(inst.opening_cost[i] for i in sol.open)
    assert opt_penalty(inst).opt_cost == 0.0
    # both facilities are removed, so nothing opens
    assert sol.cost == 0.0


@pytest.mark.parametrize("seed", range(25))
def test_penalty_huge_matches_plain(seed):
    base = tiny_instance(seed, "plain")
    inst = explicit(base.opening_cost, base.dist, "penalty", penalties=np.full(base.n_clients, 1e6))
    if not np.isfinite(base.dist).all():
        return
    sol = penalty_facloc(inst)
    assert sol.served == frozenset(inst.clients)
    assert sol.cost <= 3 * opt_plain(base).opt_cost + 1e-9
    assert sol.cost == pytest.approx(mettu_plaxton(base).cost)


def test_penalty_single_free_facility():
    inst = explicit([0], [[0]], "penalty", penalties=[4])
    assert penalty_facloc(inst).cost == 0.0


def test_penalty_serves_only_cheaper_clients():
    inst = explicit([0], [[1, 5]], "penalty", penalties=[2, 3])
    sol = penalty_facloc(inst)
    assert sol.served == {0} and sol.outliers == {1} and sol.cost == 4.0
