"""Solve-and-certify pipelines shared by the CLI, the tests and the demos."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..dual import (
    BoundReport,
    FeasibilityReport,
    build_penalty_dual,
    build_robust_dual,
    check_bound,
    check_dual_feasible,
)
from ..model import Instance, Variant, evaluate_cost
from ..oracle import MAX_FACILITIES, opt_penalty, opt_plain, opt_robust
from ..sequential import (
    best_trial,
    mettu_plaxton,
    penalty_facloc_run,
    radius_table,
    robust_facloc_trials,
)

ORACLE_LIMIT = 14


@dataclass
class Report:
    variant: str
    eps: float
    alg_cost: float
    dual: object = None
    feasibility: FeasibilityReport | None = None
    bound: BoundReport | None = None
    opt_cost: float | None = None
    charged_rounds: int | None = None
    k: int | None = None
    solution: object = None
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float | None:
        if self.opt_cost is None:
            return None
        if self.opt_cost == 0:
            return 1.0 if self.alg_cost <= 1e-9 else math.inf
        return self.alg_cost / self.opt_cost

    def row(self, instance: str = "", seed: int = 0) -> dict:
        return {
            "instance": instance,
            "seed": seed,
            "variant": self.variant,
            "eps": self.eps,
            "k": "" if self.k is None else self.k,
            "alg_cost": self.alg_cost,
            "opt_cost": "" if self.opt_cost is None else self.opt_cost,
            "ratio": "" if self.ratio is None else self.ratio,
            "dual_obj": "" if self.dual is None else self.dual.objective / self.extra.get("scale", 1.0),
            "feasible": "" if self.feasibility is None else self.feasibility.ok,
            "bound_ok": "" if self.bound is None else self.bound.ok,
            "charged_rounds": "" if self.charged_rounds is None else self.charged_rounds,
        }


def optimum(inst: Instance) -> float:
    if inst.variant is Variant.ROBUST:
        return opt_robust(inst).opt_cost
    if inst.variant is Variant.PENALTY:
        return opt_penalty(inst).opt_cost
    return opt_plain(inst).opt_cost


def _maybe_opt(inst, with_oracle):
    if with_oracle is None:
        with_oracle = inst.n_facilities <= ORACLE_LIMIT
    if with_oracle and inst.n_facilities <= MAX_FACILITIES:
        return optimum(inst)
    return None


def solve_sequential(inst: Instance, eps: float, with_oracle: bool | None = None) -> Report:
    """Run the sequential solver for the instance's variant and certify it."""
    if inst.variant is Variant.ROBUST:
        trial = best_trial(robust_facloc_trials(inst, eps))
        dual = build_robust_dual(trial.modified, trial.radii.radii, trial.pre_outlier_served)
        feas = check_dual_feasible(dual, trial.modified)
        bound = check_bound(trial.cost_modified, dual, "robust", inst.opening_cost[trial.anchor])
        sol = trial.solution
    elif inst.variant is Variant.PENALTY:
        run = penalty_facloc_run(inst)
        dual = build_penalty_dual(inst, run.radii.radii)
        feas = check_dual_feasible(dual, inst)
        bound = check_bound(run.solution.cost, dual, "penalty")
        sol = run.solution
    else:
        sol = mettu_plaxton(inst)
        dual = feas = bound = None
    return Report(inst.variant.value, eps, sol.cost, dual, feas, bound, _maybe_opt(inst, with_oracle), solution=sol)


def certify_distributed(res, eps: float):
    """Dual from exact radii with ``(1+eps)^4`` slack for the chosen distributed trial.

    Everything is checked on the normalized instance; the objective is
    reported back in the caller's units.
    """
    norm, scale = res.normalized, res.scale
    sol = res.solution
    if norm.variant is Variant.ROBUST:
        trial = next(t for t in res.trials if t.solution is sol)
        mod = trial.modified
        dual = build_robust_dual(mod, radius_table(mod).radii, trial.pre_outlier_served, slack=(1 + eps) ** 4)
        feas = check_dual_feasible(dual, mod)
        cost_e = evaluate_cost(mod, replace(sol, cost=0.0))
        bound = check_bound(cost_e, dual, "robust", norm.opening_cost[trial.anchor], eps, distributed=True)
    else:
        dual = build_penalty_dual(norm, radius_table(norm, "penalty").radii)
        feas = check_dual_feasible(dual, norm)
        bound = check_bound(evaluate_cost(norm, replace(sol, cost=0.0)), dual, "penalty", eps=eps, distributed=True)
    return dual, feas, bound, scale


def solve_distributed(inst: Instance, cluster, eps: float, seed: int = 0, with_oracle: bool | None = None,
                      **kw) -> Report:
    from ..distsim.algorithms import penalty_facloc_dist_run, robust_facloc_dist_run

    if inst.variant is Variant.ROBUST:
        res = robust_facloc_dist_run(inst, cluster, eps, seed, **kw)
    elif inst.variant is Variant.PENALTY:
        res = penalty_facloc_dist_run(inst, cluster, eps, seed, **kw)
    else:
        raise ValueError("the simulator runs robust or penalty instances")
    dual, feas, bound, scale = certify_distributed(res, eps)
    rep = Report(inst.variant.value, eps, res.solution.cost, dual, feas, bound, _maybe_opt(inst, with_oracle),
                 res.transcript.charged_rounds, cluster.k, res.solution)
    rep.extra["transcript"] = res.transcript
    rep.extra["scale"] = scale
    return rep
