"""Robust facility location on a small planted-cluster instance.

Three clusters of clients, each with a hub facility, plus a coverage
requirement that lets the solver skip one cluster.  We compare the greedy
answer with the exact optimum and look at the per-anchor trials.
"""

from outlierfl import opt_robust, robust_facloc
from outlierfl.harness.generators import PlantedClusters
from outlierfl.sequential import robust_facloc_trials

inst = PlantedClusters(centers=3, spread=1.0, seed=7, size=4).build("robust", coverage=8)
print(f"{inst.n_facilities} facilities, {inst.n_clients} clients, must serve {inst.coverage}")
print("opening costs:", inst.opening_cost.tolist())

# one trial per anchor: the anchor is treated as free, pricier facilities are dropped
for t in robust_facloc_trials(inst, eps=0.1):
    print(f"  anchor {t.anchor} (f={inst.opening_cost[t.anchor]:.0f}): open {sorted(t.solution.open)}, cost {t.cost:.1f}")

sol = robust_facloc(inst, eps=0.1)
opt = opt_robust(inst)
print(f"greedy cost {sol.cost:.1f}, optimum {opt.opt_cost:.1f}, ratio {sol.cost / opt.opt_cost:.3f}")
print("outliers:", sorted(sol.outliers))
