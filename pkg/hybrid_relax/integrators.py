"""Fixed-step one-step integrators and their exact one-step Jacobians."""

from __future__ import annotations

import enum
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .fields import Array

Field = Callable[[Array], Array]


class NumericalError(RuntimeError):
    """Raised when a field or step produces non-finite values."""


class IntegratorKind(enum.Enum):
    EULER = "euler"
    RK4 = "rk4"

    @property
    def order(self) -> int:
        return 1 if self is IntegratorKind.EULER else 4


@dataclass(frozen=True)
class IntegratorScheme:
    kind: IntegratorKind
    h: float

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError(f"step size must be positive, got {self.h}")

    @property
    def order(self) -> int:
        return self.kind.order


def step(f: Field, x: Array, h: float, kind: IntegratorKind) -> Array:
    """Advance ``x' = f(x)`` by one step of size ``h``."""

    if kind is IntegratorKind.EULER:
        out: Array = x + h * f(x)
    else:
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"non-finite step from x={np.array2string(x)}")
    return out


def step_jacobian(
    f: Field, jac: Callable[[Array], Array], x: Array, h: float, kind: IntegratorKind
) -> Array:
    """Derivative of the one-step map with respect to ``x``."""

    eye = np.eye(x.shape[0])
    if kind is IntegratorKind.EULER:
        out: Array = eye + h * jac(x)
        return out
    k1 = f(x)
    d1 = jac(x)
    x2 = x + 0.5 * h * k1
    k2 = f(x2)
    d2 = jac(x2) @ (eye + 0.5 * h * d1)
    x3 = x + 0.5 * h * k2
    k3 = f(x3)
    d3 = jac(x3) @ (eye + 0.5 * h * d2)
    d4 = jac(x + h * k3) @ (eye + h * d3)
    out = eye + (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
    return out


__all__ = [
    "IntegratorKind",
    "IntegratorScheme",
    "NumericalError",
    "step",
    "step_jacobian",
]
