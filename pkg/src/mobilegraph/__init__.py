"""Mobile geometric scale-free random graphs: broadcast and percolation-time simulation."""
from .dynamics import EdgeOracle, Snapshot, evolve, has_edge, epoch_thresholds, snapshot_at
from .errors import ConfigError, InvalidInput, ResourceLimit
from .geometry import Domain, brownian_step, distance
from .graph import ComponentLabels, components_exact, components_fast, degree_stats
from .kernels import KernelParams, connection_prob, mean_degree_upper, threshold_radius
from .pointprocess import MarkLayers, PointCloud, layer_of, sample_ppp, thin
from .propagation import run_broadcast, run_percolation_proxy

__version__ = "0.1.0"

__all__ = [
    "EdgeOracle", "Snapshot", "evolve", "has_edge", "epoch_thresholds", "snapshot_at",
    "ConfigError", "InvalidInput", "ResourceLimit", "Domain", "brownian_step", "distance",
    "ComponentLabels", "components_exact", "components_fast", "degree_stats", "KernelParams",
    "connection_prob", "mean_degree_upper", "threshold_radius", "MarkLayers", "PointCloud",
    "layer_of", "sample_ppp", "thin", "run_broadcast", "run_percolation_proxy",
]
