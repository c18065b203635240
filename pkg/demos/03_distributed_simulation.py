"""Round accounting of the distributed robust solver for growing machine counts.

Randomness is seeded independently of the vertex partition, so the
solution is the same for every k; only the bill changes.
"""

from outlierfl.distsim import make_cluster, robust_facloc_dist
from outlierfl.harness.generators import RandomGraph
from outlierfl.sequential import robust_facloc

inst = RandomGraph(128, 256, 10, seed=3).build("robust", coverage=50, f_max=30)
print("sequential cost:", robust_facloc(inst, 0.25).cost)

for k in (1, 2, 4, 8, 16, 32):
    sol, tr = robust_facloc_dist(inst, make_cluster(128, k, seed=3), eps=0.25, seed=3)
    busiest = max(e["rounds"] for e in tr.primitive_log)
    print(f"k={k:3d}  cost {sol.cost:6.1f}  charged {tr.charged_rounds:>12d}  executed {tr.rounds_executed:5d}  "
          f"violations {tr.violations()}  largest single entry {busiest}")

# the same run with real message passing for shortest paths on a small graph
small = RandomGraph(24, 40, 6, seed=5).build("robust", coverage=8)
sol, tr = robust_facloc_dist(small, make_cluster(24, 3, seed=5), eps=0.2, seed=5,
                             mssp_backend="bellman-ford", distance_backend="exact")
bf = sum(e["rounds"] for e in tr.primitive_log if e["name"].endswith(":bf"))
print(f"bellman-ford backend: cost {sol.cost}, {bf} executed relaxation rounds, violations {tr.violations()}")
