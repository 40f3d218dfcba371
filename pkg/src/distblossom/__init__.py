"""Distributed and serial minimum-weight perfect matching via blossoms."""

from .graph import (
    InstanceError,
    Matching,
    ProblemGraph,
    Weight,
    format_matching,
    format_weight,
    load_instance,
    parse_instance,
    parse_weight,
    save_instance,
)
from .runtime import EventTrace, LivelockSuspected, SchedulerConfig, Simulator
from .serial import hungarian_maximum_matching, serial_mwpm
from .solver import DistributedResult, solve_distributed
from .verify import (
    OptimalityCertificate,
    audit_trace,
    build_crown,
    certificate_from_trace,
    check_certificate,
    oracle_mwpm,
    validate_quiescent_state,
)

__version__ = "0.1.0"

__all__ = [
    "DistributedResult",
    "EventTrace",
    "InstanceError",
    "LivelockSuspected",
    "Matching",
    "OptimalityCertificate",
    "ProblemGraph",
    "SchedulerConfig",
    "Simulator",
    "Weight",
    "audit_trace",
    "build_crown",
    "certificate_from_trace",
    "check_certificate",
    "format_matching",
    "format_weight",
    "hungarian_maximum_matching",
    "load_instance",
    "oracle_mwpm",
    "parse_instance",
    "parse_weight",
    "save_instance",
    "serial_mwpm",
    "solve_distributed",
    "validate_quiescent_state",
]
