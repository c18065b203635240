import math

import numpy as np
import pytest

from helpers import explicit, graph
from outlierfl import AccountingError, DistanceOracle, StructuralError
from outlierfl.distsim import (
    ChargeModel,
    Simulator,
    approx_radii,
    approximate_mis,
    charged_mssp,
    check_mis,
    lambda_bound,
    make_cluster,
    nbd_size_estimates,
    penalty_class,
    penalty_facloc_dist,
    robust_facloc_dist,
)
from outlierfl.distsim.algorithms import robust_facloc_dist_run
from outlierfl.distsim.nbd import ExactCounts, exact_counts, ring_index
from outlierfl.distsim.radii import ring_widths
from outlierfl.harness.generators import RandomGraph, tiny_instance
from outlierfl.model import Instance, MetricView
from outlierfl.oracle import opt_penalty, opt_plain
from outlierfl.sequential import penalty_surplus, radius_table


def sim_for(inst, k=4, seed=0, eps=0.1, backend="exact", mssp="charged", B=16):
    o = DistanceOracle(inst.metric, eps if backend == "rounded" else 0.0, backend, seed)
    return Simulator(make_cluster(inst.metric.n, k, seed, B), o, eps, mssp_backend=mssp)


# -- cluster and ledger ------------------------------------------------------

def test_single_machine():
    assert np.all(make_cluster(10, 1, 3).partition == 0)


def test_congested_clique_bijection():
    c = make_cluster(12, 12, 0, congested_clique=True)
    assert sorted(c.partition.tolist()) == list(range(12))
    with pytest.raises(StructuralError):
        make_cluster(12, 5, 0, congested_clique=True)


def test_partition_deterministic_and_covering():
    a, b = make_cluster(100, 7, 42), make_cluster(100, 7, 42)
    assert np.array_equal(a.partition, b.partition)
    assert sum(len(a.hosted(m)) for m in range(7)) == 100


def test_bad_k():
    with pytest.raises(StructuralError):
        make_cluster(5, 0, 0)


def test_charge_formula_cc_64():
    assert ChargeModel().mssp_rounds(64, 64, 0.1) == 36


def test_charge_halves_with_double_k():
    m = ChargeModel()
    assert m.mssp_rounds(256, 8, 0.1) == 2 * m.mssp_rounds(256, 16, 0.1)


def test_charged_mssp_delegates_and_bills():
    inst = RandomGraph(64, 128, 5, seed=1).build()
    sim = sim_for(inst, k=64)
    near, dist = charged_mssp(sim, [0, 3, 9])
    n2, d2 = sim.oracle.mssp([0, 3, 9])
    assert np.array_equal(near, n2) and np.array_equal(dist, d2)
    assert sim.t.primitive_log[-1]["rounds"] == 36


def test_payload_overflow_raises():
    inst = RandomGraph(64, 128, 5, seed=1).build()
    sim = Simulator(make_cluster(64, 1, 0, 1), DistanceOracle(inst.metric), 0.1, ChargeModel(c1=0.001))
    with pytest.raises(AccountingError):
        charged_mssp(sim, [0])


def test_exchange_splits_rounds_within_bandwidth():
    inst = RandomGraph(16, 20, 5, seed=0).build()
    sim = sim_for(inst, k=4, B=3)
    w = np.zeros((4, 4), dtype=int)
    w[0, 1] = 10
    w[2, 3] = 4
    assert sim.exchange("x", w) == 4
    assert sim.t.violations() == 0
    assert all(s.max() <= 3 * 3 for s in sim.t.sent)


@pytest.mark.parametrize("seed", range(4))
def test_bellman_ford_matches_exact(seed):
    inst = RandomGraph(30, 50, 6, seed=seed).build()
    bf = sim_for(inst, k=3, seed=seed, mssp="bellman-ford")
    ex = sim_for(inst, k=3, seed=seed)
    src = [1, 7, 20]
    a = bf.mssp(src)
    b = ex.mssp(src)
    assert np.array_equal(a[0], b[0]) and np.allclose(a[1], b[1])
    s1, n1, d1 = bf.exclusive_mssp(src)
    s2, n2, d2 = ex.exclusive_mssp(src)
    assert np.array_equal(n1, n2) and np.allclose(d1, d2)
    assert bf.t.rounds_executed > 0 and bf.t.violations() == 0


# -- neighborhood sizes ------------------------------------------------------

def test_colocated_points_estimate():
    n = 40
    edges = [[0, j, 0.0] for j in range(1, n)]
    inst = graph(1, n - 1, edges)
    hits = 0
    for seed in range(5):
        sim = sim_for(inst, seed=seed, eps=0.5)
        est = nbd_size_estimates(sim, 0.5, range(n), seed=seed)
        vals = np.array([est.query(v, 0.0) for v in range(n)])
        hits += np.mean(np.abs(vals - n) <= 0.5 * n)
    assert hits / 5 >= 0.95


def test_single_participant():
    inst = graph(1, 2, [[0, 1, 3], [1, 2, 1]])
    sim = sim_for(inst, eps=0.5)
    est = nbd_size_estimates(sim, 0.5, [2], seed=1)
    assert est.query(0, 4.0) == pytest.approx(1.0, rel=0.1)
    assert est.query(0, 3.9) == 0.0


def test_empty_class_is_zero():
    inst = graph(1, 2, [[0, 1, 3], [1, 2, 1]])
    sim = sim_for(inst, eps=0.5)
    est = nbd_size_estimates(sim, 0.5, [], seed=1)
    assert est.query(0, 100.0) == 0.0
    assert np.all(est.ring_counts(0, 5) == 0)


def test_ring_index_edges():
    assert ring_index(np.array([0.0, 1.0, 1.1, 1.21, 1.3, math.inf]), 0.1).tolist() == [0, 0, 1, 2, 3, -1]


def test_ring_counts_agree_with_queries():
    inst = RandomGraph(40, 70, 9, seed=2).build()
    sim = sim_for(inst, eps=0.25)
    part = np.arange(inst.n_facilities, 40)
    est = nbd_size_estimates(sim, 0.25, part, seed=3)
    q = est.ring_counts(0, 12)
    for i in (0, 3, 7, 11):
        assert q[i] == pytest.approx(est.query(0, 1.25**i))
    ex = exact_counts(sim, 0.25, part)
    assert ex.ring_counts(0, 12)[7] == ex.query(0, 1.25**7)


# -- radii -------------------------------------------------------------------

def test_zero_cost_radius_clamped():
    inst = graph(1, 1, [[0, 1, 3]])
    sim = sim_for(inst)
    rt = approx_radii(exact_counts(sim, 0.1, [1]), [0.0], 0.1)
    assert rt.radii[0] == 0.0


@pytest.mark.parametrize("seed", range(8))
def test_exact_counts_sandwich(seed):
    eps = 0.25
    inst = RandomGraph(50, 90, 10, seed=seed).build(f_max=60)
    sim = sim_for(inst, eps=eps)
    rt = approx_radii(exact_counts(sim, eps, np.arange(inst.n_facilities, 50)), inst.opening_cost, eps)
    r = radius_table(inst).radii
    assert np.all(rt.radii >= r / (1 + eps) ** 2 - 1e-9)
    assert np.all(rt.radii <= r * (1 + eps) ** 2 + 1e-9)


def test_penalty_caps_below_cost_removed():
    inst = graph(1, 2, [[0, 1, 1], [0, 2, 1]], f=[10], variant="penalty", penalties=[2, 2])
    sim = sim_for(inst)
    cls = penalty_class(inst.penalties, 0.1)
    base = exact_counts(sim, 0.1, [1, 2])
    ce = {int(b): base.restrict(cls == b) for b in np.unique(cls)}
    rt = approx_radii(None, inst.opening_cost, 0.1, "penalty", class_estimates=ce)
    assert math.isinf(rt.radii[0])


def test_penalty_class_labels():
    assert penalty_class([0, 1, 1.09, 1.1, 2.0], 0.1).tolist() == [-1, 0, 0, 1, 7]


@pytest.mark.parametrize("seed", range(10))
def test_lambda_never_exceeds_alpha(seed):
    eps = 0.2
    rng = np.random.default_rng(seed)
    d = rng.integers(1, 30, size=25).astype(float)
    p = rng.integers(1, 40, size=25).astype(float)
    cls = penalty_class(p, eps)
    for b in np.unique(cls):
        m = cls == b
        ex = ExactCounts(eps, np.flatnonzero(m), d[None, m])
        for t in range(0, 25):
            q = ex.ring_counts(0, t + 1)
            lam = lambda_bound(q, t, int(b), eps)
            alpha = penalty_surplus((1 + eps) ** t, d[m], p[m])
            assert lam <= alpha + 1e-9


def test_ring_widths():
    assert ring_widths(3, 1.0).tolist() == [1.0, 2.0, 4.0]


# -- independent sets --------------------------------------------------------

def line(n, spacing=1.0):
    return graph(n, 0, [[i, i + 1, spacing] for i in range(n - 1)])


def test_mis_single_vertex():
    inst = line(3)
    assert approximate_mis(sim_for(inst), [1], 2.0, 0.1) == [1]


def test_mis_two_far_vertices():
    inst = line(2, spacing=5.0)
    assert approximate_mis(sim_for(inst), [0, 1], 2.0, 0.1) == [0, 1]


def test_mis_line_of_five():
    inst = line(5)
    sim = sim_for(inst, eps=1e-6)
    I = approximate_mis(sim, range(5), 1.5, 1e-6, seed=3)
    sep, dom = check_mis(inst.metric.full, range(5), I, 1.5, 1 + 1e-6, 1 + 1e-6)
    assert sep and dom
    assert all(abs(a - b) >= 2 for a in I for b in I if a != b)


@pytest.mark.parametrize("seed", range(15))
def test_mis_rounded_clauses(seed):
    eps = 0.2
    inst = RandomGraph(40, 70, 9, seed=seed).build()
    sim = sim_for(inst, seed=seed, eps=eps, backend="rounded")
    rng = np.random.default_rng(seed)
    W = rng.choice(40, size=25, replace=False)
    d = float(rng.uniform(1, 15))
    I = approximate_mis(sim, W, d, eps, seed=seed)
    assert set(I) <= set(W.tolist())
    assert check_mis(inst.metric.full, W, I, d, (1 + eps) ** 2, 1 + eps) == (True, True)


# -- distributed solvers -----------------------------------------------------

def test_robust_dist_single_machine_and_determinism():
    inst = tiny_instance(4, "robust")
    c1 = make_cluster(inst.metric.n, 1, 9)
    s1, t1 = robust_facloc_dist(inst, c1, 0.1, seed=9)
    s2, t2 = robust_facloc_dist(inst, make_cluster(inst.metric.n, 1, 9), 0.1, seed=9)
    assert s1.to_dict() == s2.to_dict() and t1.to_dict() == t2.to_dict()
    assert t1.charged_rounds >= t1.rounds_executed and t1.violations() == 0


def test_robust_dist_same_result_across_k():
    inst = tiny_instance(7, "robust")
    a, ta = robust_facloc_dist(inst, make_cluster(inst.metric.n, 1, 2), 0.1, seed=2)
    b, tb = robust_facloc_dist(inst, make_cluster(inst.metric.n, 4, 2), 0.1, seed=2)
    assert a.to_dict() == b.to_dict()
    assert tb.charged_rounds < ta.charged_rounds


@pytest.mark.parametrize("seed", range(10))
def test_served_clients_within_slack(seed):
    eps = 0.1
    inst = RandomGraph(40, 70, 9, seed=seed).build("robust", f_max=20)
    res = robust_facloc_dist_run(inst, make_cluster(40, 4, seed), eps, seed, exact_estimates=True)
    ex = inst.metric.full
    nf = inst.n_facilities
    for t in res.trials:
        r = t.radii.radii
        rho = t.last_radius
        procd = np.flatnonzero(r <= rho)
        for j in t.pre_outlier_served:
            assert ex[procd, nf + j].min() <= (1 + eps) ** 3 * rho + 1e-9


def test_robust_dist_bellman_ford_backend():
    inst = tiny_instance(5, "robust")
    cl = make_cluster(inst.metric.n, 3, 1)
    sol, tr = robust_facloc_dist(inst, cl, 0.1, seed=1, mssp_backend="bellman-ford", distance_backend="exact")
    ref, _ = robust_facloc_dist(inst, make_cluster(inst.metric.n, 3, 1), 0.1, seed=1, distance_backend="exact")
    assert sol.cost == ref.cost
    assert tr.violations() == 0


def test_penalty_dist_all_zero():
    inst = explicit([1, 2], [[1, 3], [2, 1]], "penalty", penalties=[0, 0])
    sol, _ = penalty_facloc_dist(inst, make_cluster(4, 2, 0), 0.1)
    assert sol.served == frozenset() and sol.cost == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_penalty_dist_huge_penalties(seed):
    eps = 0.1
    base = tiny_instance(seed, "plain")
    if not np.isfinite(base.dist).all():
        return
    inst = Instance(base.opening_cost, base.metric, "penalty", penalties=np.full(base.n_clients, 1e4))
    sol, tr = penalty_facloc_dist(inst, make_cluster(base.metric.n, 2, seed), eps, seed=seed)
    assert sol.cost <= 3 * (1 + eps) ** 4 * opt_plain(base).opt_cost + 1e-9
    again, tr2 = penalty_facloc_dist(inst, make_cluster(base.metric.n, 2, seed), eps, seed=seed)
    assert again.to_dict() == sol.to_dict() and tr.to_dict() == tr2.to_dict()
