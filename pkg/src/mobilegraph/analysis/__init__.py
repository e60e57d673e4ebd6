"""Diagnostics derived from the proof constructions."""
from .chernoff import chernoff_binomial, chernoff_poisson
from .connectors import (ConnectorCount, connector_bracket, connector_counts,
                         proof_constant, two_connector_count)
from .density import DensityReport, density_check
from .membership import MembershipResult, membership_experiment, probe_in_component, shared_vertex
from .spread import (SpreadSubgraph, build_spread_subgraph, snake_order, spread_scales,
                     verify_spread)

__all__ = [
    "chernoff_binomial", "chernoff_poisson", "ConnectorCount", "connector_bracket",
    "connector_counts", "proof_constant", "two_connector_count", "DensityReport",
    "density_check", "MembershipResult", "membership_experiment", "probe_in_component",
    "shared_vertex", "SpreadSubgraph", "build_spread_subgraph", "snake_order",
    "spread_scales", "verify_spread",
]
