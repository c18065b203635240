"""Round- and bandwidth-accounting simulator of the k-machine model."""

from .cluster import ChargeModel, Cluster, Simulator, SimTranscript, charged_mssp, make_cluster
from .nbd import ExactCounts, NbdEstimates, nbd_size_estimates
from .radii import ApproxRadiusTable, approx_radii, lambda_bound, penalty_class
from .mis import approximate_mis, check_mis
from .algorithms import DistResult, penalty_facloc_dist, robust_facloc_dist
