"""Simulation of hybrid systems through epsilon-relaxed transitions."""

from .analysis import (
    HybridPoint,
    contact_intervals,
    quotient_distance,
    rest_error,
    trajectory_distance,
    variational_flow,
)
from .execution import (
    simulate_augmented,
    simulate_discrete,
    simulate_filippov,
    simulate_relaxed_reference,
)
from .integrators import IntegratorKind, IntegratorScheme
from .model import (
    EdgeKind,
    HybridSystem,
    InputSignal,
    build_system,
    classify_edge,
    load_system,
    validate_system,
)
from .registry import bouncing_ball, double_pendulum, registry_system
from .relaxation import RelaxationParams, RelaxedSystem, TransitionFunction

__version__ = "0.1.0"

__all__ = [
    "EdgeKind",
    "HybridPoint",
    "HybridSystem",
    "InputSignal",
    "IntegratorKind",
    "IntegratorScheme",
    "RelaxationParams",
    "RelaxedSystem",
    "TransitionFunction",
    "__version__",
    "bouncing_ball",
    "build_system",
    "classify_edge",
    "contact_intervals",
    "double_pendulum",
    "load_system",
    "quotient_distance",
    "registry_system",
    "rest_error",
    "simulate_augmented",
    "simulate_discrete",
    "simulate_filippov",
    "simulate_relaxed_reference",
    "trajectory_distance",
    "validate_system",
    "variational_flow",
]
