"""Distributed robust and penalty facility location on the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InfeasibleError, StructuralError
from ..metric import DistanceOracle
from ..model import (
    Instance,
    Solution,
    Variant,
    anchor_candidates,
    evaluate_cost,
    make_solution,
    modify_opening_costs,
    normalize,
)
from ..sequential import prune_unused
from .cluster import ChargeModel, Cluster, Simulator, SimTranscript
from .mis import approximate_mis
from .nbd import exact_counts, nbd_size_estimates, sketch_size
from .radii import ApproxRadiusTable, approx_radii, penalty_class


@dataclass
class DistTrial:
    anchor: int
    modified: Instance  # normalized and anchor-modified
    radii: ApproxRadiusTable
    opened: list
    pre_outlier_served: frozenset
    solution: Solution | None
    cost: float
    last_radius: float = 0.0  # radius class at which the greedy stopped


@dataclass
class DistResult:
    solution: Solution
    transcript: SimTranscript
    normalized: Instance
    scale: float
    trials: list = field(default_factory=list)
    radii: ApproxRadiusTable | None = None


def _setup(inst, cluster, eps, seed, distance_backend, mssp_backend, charge):
    if eps <= 0:
        raise ValueError("eps must be positive")
    norm, scale = normalize(inst)
    if cluster.n != inst.metric.n:
        raise StructuralError("cluster size must equal the number of vertices")
    oracle = DistanceOracle(norm.metric, eps if distance_backend == "rounded" else 0.0,
                            backend=distance_backend, seed=seed)
    return norm, scale, Simulator(cluster, oracle, eps, charge, mssp_backend)


def _radius_classes(radii: np.ndarray, eps: float):
    """Distinct finite radius values in increasing order, zero first."""
    vals = np.unique(radii[np.isfinite(radii)])
    return [float(x) for x in vals]


def _greedy(sim: Simulator, radii: np.ndarray, eps: float, seed: int, tag: int, on_class=None):
    """Class-by-class opening: prune near the open set, then an independent set of the class."""
    nf = sim.oracle.nf
    spread = 2.0 * (1.0 + eps) ** 3
    alive = np.flatnonzero(np.isfinite(radii))
    opened: list[int] = []
    processed: list[int] = []
    for c_idx, rho in enumerate(_radius_classes(radii, eps)):
        if opened and len(alive):
            _, dist = sim.mssp(opened, alive, name="greedy:prune")
            alive = alive[~(dist <= spread * rho)]
        cls = np.flatnonzero(radii == rho)
        cand = np.intersect1d(alive, cls)
        if len(cand):
            new = approximate_mis(sim, cand, spread * rho, eps, seed=seed, tag=tag * 100003 + c_idx)
            opened.extend(new)
        alive = np.setdiff1d(alive, cls)
        processed.extend(int(i) for i in cls)
        if on_class is not None and on_class(rho, processed, opened):
            break
    return sorted(opened)


def _select_rounds(sim: Simulator, name: str) -> None:
    # threshold search over the reported distances: one aggregation per bit
    for _ in range(max(1, math.ceil(math.log2(max(sim.oracle.n, 2))))):
        sim.aggregate(name)


def robust_facloc_dist_run(inst: Instance, cluster: Cluster, eps: float, seed: int = 0, *,
                           cohen_c: float = 8.0, distance_backend: str = "rounded",
                           mssp_backend: str = "charged", charge: ChargeModel | None = None,
                           exact_estimates: bool = False) -> DistResult:
    if inst.variant is not Variant.ROBUST:
        raise StructuralError("robust solver needs a robust instance")
    reach = np.isfinite(inst.dist).any(axis=0).sum()
    if reach < inst.coverage:
        raise InfeasibleError(f"only {reach} clients reachable, coverage {inst.coverage}")
    norm, scale, sim = _setup(inst, cluster, eps, seed, distance_backend, mssp_backend, charge)
    nf, nc, ell = norm.n_facilities, norm.n_clients, norm.ell
    clients = np.arange(nf, nf + nc)
    est = exact_counts(sim, eps, clients) if exact_estimates else nbd_size_estimates(sim, eps, clients, seed, cohen_c)
    trials = []
    for a_idx, anchor in enumerate(anchor_candidates(norm, eps)):
        sim.broadcast("anchor", anchor)
        mod = modify_opening_costs(norm, anchor)
        radii = approx_radii(est, mod.opening_cost, eps, "plain")
        served = np.zeros(nc, dtype=bool)
        last = [0.0]

        def on_class(rho, processed, opened):
            last[0] = rho
            _, dist = sim.mssp(processed, clients, name="greedy:serve")
            served[:] |= dist <= (1.0 + eps) * rho
            sim.aggregate("greedy:count")
            return nc - int(served.sum()) <= ell

        opened = _greedy(sim, radii.radii, eps, seed, a_idx, on_class)
        pre = frozenset(int(j) for j in np.flatnonzero(served))
        _, dist = sim.mssp(opened, clients, name="outliers:distance")
        _select_rounds(sim, "outliers:select")
        sv = set(pre)
        outl = [j for j in range(nc) if j not in sv]
        if len(outl) > ell:
            outl.sort(key=lambda j: (dist[j], j))
            sv.update(outl[: len(outl) - ell])
        elif len(outl) < ell:
            cs = sorted(sv, key=lambda j: (-dist[j], j))
            sv.difference_update(cs[: ell - len(outl)])
        exact = norm.dist[opened].min(axis=0) if opened else np.full(nc, math.inf)
        if any(math.isinf(exact[j]) for j in sv):
            trials.append(DistTrial(anchor, mod, radii, opened, pre, None, math.inf, last[0]))
            continue
        sol = prune_unused(inst, make_solution(inst, opened, sv, anchor=anchor))
        trials.append(DistTrial(anchor, mod, radii, opened, pre, sol, sol.cost, last[0]))
    best = min(range(len(trials)), key=lambda t: (trials[t].cost, t))
    if math.isinf(trials[best].cost):
        raise InfeasibleError("no anchor yields a solution meeting the coverage requirement")
    return DistResult(trials[best].solution, sim.t, norm, scale, trials, trials[best].radii)


def robust_facloc_dist(inst: Instance, cluster: Cluster, eps: float, seed: int = 0, **kw):
    """Distributed robust facility location; returns ``(solution, transcript)``."""
    res = robust_facloc_dist_run(inst, cluster, eps, seed, **kw)
    return res.solution, res.transcript


def penalty_facloc_dist_run(inst: Instance, cluster: Cluster, eps: float, seed: int = 0, *,
                            cohen_c: float = 8.0, distance_backend: str = "rounded",
                            mssp_backend: str = "charged", charge: ChargeModel | None = None,
                            exact_estimates: bool = False) -> DistResult:
    if inst.variant is not Variant.PENALTY:
        raise StructuralError("penalty solver needs a penalty instance")
    norm, scale, sim = _setup(inst, cluster, eps, seed, distance_backend, mssp_backend, charge)
    nf, nc = norm.n_facilities, norm.n_clients
    clients = np.arange(nf, nf + nc)
    cls = penalty_class(norm.penalties, eps)
    pos = cls >= 0
    if exact_estimates:
        base = exact_counts(sim, eps, clients[pos])
    else:
        base = nbd_size_estimates(sim, eps, clients[pos], seed, cohen_c)
    labels = cls[pos]
    class_est = {int(b): base.restrict(labels == b) for b in np.unique(labels)}
    if not exact_estimates:
        # every class runs its own sketch pass
        extra = max(0, len(class_est) - 1)
        if extra and len(labels):
            _, reps, grid = sketch_size(sim.oracle.n, eps, cohen_c)
            rounds = sim.charge_model.mssp_rounds(sim.oracle.n, cluster.k, eps)
            sim.charge("nbd-classes:mssp", rounds, 0, times=extra * reps * (grid + 1))
    radii = approx_radii(None, norm.opening_cost, eps, "penalty", class_estimates=class_est)
    opened = _greedy(sim, radii.radii, eps, seed, 0)
    if opened:
        _, dist = sim.mssp(opened, clients, name="outliers:distance")
        served = [j for j in range(nc) if dist[j] <= norm.penalties[j]]
    else:
        served = []
    sol = make_solution(inst, opened, served)
    return DistResult(sol, sim.t, norm, scale, [], radii)


def penalty_facloc_dist(inst: Instance, cluster: Cluster, eps: float, seed: int = 0, **kw):
    """Distributed penalty facility location; returns ``(solution, transcript)``."""
    res = penalty_facloc_dist_run(inst, cluster, eps, seed, **kw)
    return res.solution, res.transcript
