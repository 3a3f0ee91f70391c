"""Entanglement-assisted communication over the bosonic thermal-loss multiple-access channel."""

from .circuit import MacScenario, mac_output_state
from .estimators import CapacityRegion, ReceiverRegion
from .exceptions import (
    CutoffError,
    PhysicalityError,
    QmacError,
    ResourceError,
    ValidationError,
)
from .gaussian import GaussianState, g, von_neumann_entropy
from .receivers import ReceiverConfig, receiver_rate_region
from .regions import (
    RateRegion,
    classical_outer_region,
    coherent_region,
    ea_capacity_single,
    ea_outer_region,
    tmsv_region,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityRegion",
    "CutoffError",
    "GaussianState",
    "MacScenario",
    "PhysicalityError",
    "QmacError",
    "RateRegion",
    "ReceiverConfig",
    "ReceiverRegion",
    "ResourceError",
    "ValidationError",
    "classical_outer_region",
    "coherent_region",
    "ea_capacity_single",
    "ea_outer_region",
    "g",
    "mac_output_state",
    "receiver_rate_region",
    "tmsv_region",
    "von_neumann_entropy",
]
