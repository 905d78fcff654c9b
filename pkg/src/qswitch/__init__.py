"""Capacity analysis of a quantum entanglement switch serving bi- and tripartite requests."""

from .model import (
    CapacityPoint,
    PolicyParams,
    SwitchConfig,
    ValidationError,
    rate_from_slot,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityPoint",
    "PolicyParams",
    "SwitchConfig",
    "ValidationError",
    "rate_from_slot",
    "validate_config",
    "__version__",
]
