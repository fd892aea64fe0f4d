"""Built-in example systems: bouncing ball and double pendulum with a stop."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping
from typing import Any

from .contracts import (
    EdgeSpec,
    FieldSpec,
    GuardSpec,
    HalfSpace,
    ModeSpec,
    ResetSpec,
    SystemSpec,
)
from .fields.pendulum import DEFAULT_PARAMS, PARAM_NAMES, impact_ratio
from .model import ConfigurationError, HybridSystem, build_system, validate_system

LOGGER = logging.getLogger(__name__)

BALL_BOX = ((0.0, 2.0), (-3.0, 3.0))
PENDULUM_RATE = 20.0


def _check_restitution(c: float) -> None:
    if not 0.0 <= c <= 1.0:
        raise ConfigurationError(f"coefficient of restitution {c} is not in [0, 1]")


def _box(bounds: tuple[tuple[float, float], ...]) -> list[HalfSpace]:
    n = len(bounds)
    out = []
    for i, (lo, hi) in enumerate(bounds):
        up = [0.0] * n
        up[i] = 1.0
        down = [0.0] * n
        down[i] = -1.0
        out.append(HalfSpace(normal=up, offset=hi))
        out.append(HalfSpace(normal=down, offset=-lo))
    return out


def _validated(spec: SystemSpec, name: str) -> HybridSystem:
    system = build_system(spec)
    report = validate_system(system)
    if not report.ok:
        codes = ", ".join(v.code for v in report.violations)
        raise ConfigurationError(f"{name} failed validation: {codes}")
    return system


def bouncing_ball(c: float = 0.5, g: float = 1.0) -> HybridSystem:
    """Ball over a floor at ``x1 = 0``; the velocity resets to ``-c x2``."""

    _check_restitution(c)
    if g <= 0:
        raise ConfigurationError(f"gravity must be positive, got {g}")
    spec = SystemSpec(
        state_dim=2,
        modes=[
            ModeSpec(
                id=0,
                halfspaces=_box(BALL_BOX),
                field=FieldSpec(
                    kind="affine",
                    params={"F": [[0.0, 1.0], [0.0, 0.0]], "w": [0.0, -g]},
                ),
            )
        ],
        edges=[
            EdgeSpec(
                id=0,
                source=0,
                target=0,
                guard=GuardSpec(normal=[-1.0, 0.0], offset=0.0),
                reset=ResetSpec(A=[[1.0, 0.0], [0.0, -c]], b=[0.0, 0.0]),
                target_facet=GuardSpec(normal=[-1.0, 0.0], offset=0.0),
            )
        ],
    )
    return _validated(spec, "bouncing-ball")


def bouncing_ball_zeno_time(
    x0: tuple[float, float], c: float, g: float = 1.0
) -> float:
    """Accumulation time of the impacts from ``(height, velocity)``."""

    _check_restitution(c)
    x1, x2 = x0
    if c == 0.0:
        return x2 / g + math.sqrt(x2**2 + 2 * g * x1) / g
    if c == 1.0:
        return math.inf
    root = math.sqrt(x2**2 + 2 * g * x1)
    return x2 / g + (1.0 / c + 1.0) * root / (g * (1.0 / c - 1.0))


def double_pendulum(
    c: float = 0.0,
    k: float | None = None,
    stop_side: int = 1,
    **params: float,
) -> HybridSystem:
    """Double pendulum whose relative angle ``theta2`` hits a stop at 0.

    State ``(theta1, omega1, theta2, omega2)``. The domain keeps
    ``stop_side * theta2 >= 0``; at the stop the rates reset to
    ``(omega1 + k (1 + c) omega2, -c omega2)``.
    """

    _check_restitution(c)
    if stop_side not in (1, -1):
        raise ConfigurationError(f"stop_side must be +1 or -1, got {stop_side}")
    unknown = set(params) - set(PARAM_NAMES)
    if unknown:
        raise ConfigurationError(f"unknown pendulum parameters {sorted(unknown)}")
    physical = {**DEFAULT_PARAMS, **params}
    if k is None:
        k = impact_ratio(physical)
    theta2 = (0.0, math.pi) if stop_side == 1 else (-math.pi, 0.0)
    bounds = (
        (-math.pi, math.pi),
        (-PENDULUM_RATE, PENDULUM_RATE),
        theta2,
        (-PENDULUM_RATE, PENDULUM_RATE),
    )
    stop = GuardSpec(normal=[0.0, 0.0, -float(stop_side), 0.0], offset=0.0)
    A = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, k * (1.0 + c)],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, -c],
    ]
    spec = SystemSpec(
        state_dim=4,
        modes=[
            ModeSpec(
                id=0,
                halfspaces=_box(bounds),
                field=FieldSpec(kind="double_pendulum", params=physical),
            )
        ],
        edges=[
            EdgeSpec(
                id=0,
                source=0,
                target=0,
                guard=stop,
                reset=ResetSpec(A=A, b=[0.0] * 4),
                target_facet=stop,
            )
        ],
    )
    LOGGER.debug("Double pendulum with c=%g k=%g stop_side=%d", c, k, stop_side)
    return _validated(spec, "double-pendulum")


_EXAMPLES: dict[str, Callable[..., HybridSystem]] = {
    "bouncing-ball": bouncing_ball,
    "double-pendulum": double_pendulum,
}


def example_names() -> list[str]:
    return sorted(_EXAMPLES)


def registry_system(
    name: str, params: Mapping[str, Any] | None = None
) -> HybridSystem:
    """Build the named example with ``params`` overriding its defaults."""

    try:
        factory = _EXAMPLES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown example {name!r}; choose from {', '.join(example_names())}"
        ) from None
    try:
        return factory(**dict(params or {}))
    except TypeError as exc:
        raise ConfigurationError(f"{name}: {exc}") from exc


__all__ = [
    "bouncing_ball",
    "bouncing_ball_zeno_time",
    "double_pendulum",
    "example_names",
    "registry_system",
]
