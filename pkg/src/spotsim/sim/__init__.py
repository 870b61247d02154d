"""Deterministic discrete-event simulation of spot-backed cluster scaling."""

from .engine import (
    ComparisonResult,
    SimResult,
    Simulator,
    compare,
    inject_terminations,
    required_pods_at,
    run,
)
from .events import (
    EventQueue,
    NodeTerminated,
    PriceUpdate,
    ProvisioningComplete,
    ScalerPoll,
    TerminationNotice,
    WorkloadChange,
)
from .scenario import (
    OptimizerSettings,
    Scenario,
    SyntheticPrices,
    TerminationSettings,
    generate_synthetic_prices,
    load_scenario,
    read_file_from_dir,
    read_file_from_map,
)

__all__ = [
    "ComparisonResult",
    "EventQueue",
    "NodeTerminated",
    "OptimizerSettings",
    "PriceUpdate",
    "ProvisioningComplete",
    "ScalerPoll",
    "Scenario",
    "SimResult",
    "Simulator",
    "SyntheticPrices",
    "TerminationNotice",
    "TerminationSettings",
    "WorkloadChange",
    "compare",
    "generate_synthetic_prices",
    "inject_terminations",
    "load_scenario",
    "read_file_from_dir",
    "read_file_from_map",
    "required_pods_at",
    "run",
]
