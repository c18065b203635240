"""Per-instance lower bounds from the penalty dual.

The dual is built from the radii alone, then every constraint is scanned.
A feasible dual's objective is a lower bound on the optimum, so
``cost / objective`` bounds the approximation ratio without running an
exact solver.  On small instances we confirm against brute force.
"""

import numpy as np

from outlierfl.dual import build_penalty_dual, check_bound, check_dual_feasible
from outlierfl.harness.generators import RandomGraph, tiny_instance
from outlierfl.oracle import opt_penalty
from outlierfl.sequential import penalty_facloc_run

print("seed  cost   dual   opt   cost/dual")
for seed in range(8):
    inst = tiny_instance(seed, "penalty")
    run = penalty_facloc_run(inst)
    dual = build_penalty_dual(inst, run.radii.radii)
    feas = check_dual_feasible(dual, inst)
    assert feas.ok and check_bound(run.solution.cost, dual, "penalty").ok
    opt = opt_penalty(inst).opt_cost
    ratio = run.solution.cost / dual.objective if dual.objective > 0 else float("nan")
    print(f"{seed:4d} {run.solution.cost:6.1f} {dual.objective:6.2f} {opt:5.1f}   {ratio:.3f}")

# far too big to enumerate, but the certificate still bounds the ratio
inst = RandomGraph(400, 900, 10, seed=1).build("penalty", f_max=25, pen_max=30)
run = penalty_facloc_run(inst)
dual = build_penalty_dual(inst, run.radii.radii)
rep = check_dual_feasible(dual, inst)
print(f"n=400: cost {run.solution.cost:.0f}, dual {dual.objective:.1f}, feasible {rep.ok}, "
      f"certified ratio <= {run.solution.cost / dual.objective:.3f}, {len(rep.binding)} tight constraints")
print("clients left unserved:", len(run.solution.outliers), "of", inst.n_clients)
