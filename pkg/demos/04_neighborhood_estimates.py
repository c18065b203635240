"""How well min-rank sketches count clients around each facility.

For one random graph we compare sketch estimates of ball sizes with the
true counts, then show how the grid radii derived from them track the exact
radii.
"""

import numpy as np

from outlierfl import DistanceOracle
from outlierfl.distsim import Simulator, approx_radii, make_cluster, nbd_size_estimates
from outlierfl.distsim.nbd import exact_counts, sketch_size
from outlierfl.harness.generators import RandomGraph
from outlierfl.sequential import radius_table

eps = 0.25
inst = RandomGraph(128, 256, 10, seed=11).build(f_max=40)
sim = Simulator(make_cluster(128, 8, seed=11), DistanceOracle(inst.metric), eps)
clients = np.arange(inst.n_facilities, 128)
ep, reps, grid = sketch_size(128, eps)
print(f"eps'={ep:.4f}, {reps} repetitions, {grid + 1} rank grid values")

est = nbd_size_estimates(sim, eps, clients, seed=11)
ex = exact_counts(sim, eps, clients)
rel = []
for v in range(inst.n_facilities):
    q, t = est.ring_counts(v, 20), ex.ring_counts(v, 20)
    rel.extend(np.abs(q[t > 0] / t[t > 0] - 1))
rel = np.array(rel)
print(f"relative count error: median {np.median(rel):.3f}, 99th pct {np.quantile(rel, 0.99):.3f}")

r = radius_table(inst).radii
rt = approx_radii(est, inst.opening_cost, eps).radii
ratio = rt[r > 0] / r[r > 0]
inside = np.mean((ratio >= (1 + eps) ** -2) & (ratio <= (1 + eps) ** 2))
print(f"approx/exact radius ratio in [{ratio.min():.3f}, {ratio.max():.3f}], {100 * inside:.1f}% inside the band")
