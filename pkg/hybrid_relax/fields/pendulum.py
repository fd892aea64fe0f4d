"""Double pendulum dynamics derived symbolically from its Lagrangian.

State order is ``(theta1, omega1, theta2, omega2)`` with ``theta1`` measured
from the downward vertical and ``theta2`` the relative angle of the second
link. Both links are massless rods with point masses at their tips.
"""

from __future__ import annotations

import functools
from collections.abc import Callable, Mapping
from typing import Any

import numpy as np
import sympy as sp

from .base import Array, VectorField

PARAM_NAMES = ("m1", "m2", "L1", "L2", "g")
DEFAULT_PARAMS: dict[str, float] = {name: 1.0 for name in PARAM_NAMES}


@functools.lru_cache(maxsize=1)
def _lambdified() -> tuple[Callable[..., Any], Callable[..., Any]]:
    """Derive the equations of motion once and return numeric callables."""

    th1, th2, om1, om2 = sp.symbols("theta1 theta2 omega1 omega2", real=True)
    m1, m2, L1, L2, g = sp.symbols("m1 m2 L1 L2 g", positive=True)
    q = sp.Matrix([th1, th2])
    dq = sp.Matrix([om1, om2])

    tip1 = sp.Matrix([L1 * sp.sin(th1), -L1 * sp.cos(th1)])
    tip2 = tip1 + sp.Matrix([L2 * sp.sin(th1 + th2), -L2 * sp.cos(th1 + th2)])
    vel1 = tip1.jacobian(q) * dq
    vel2 = tip2.jacobian(q) * dq
    kinetic = (m1 * vel1.dot(vel1) + m2 * vel2.dot(vel2)) / 2
    potential = g * (m1 * tip1[1] + m2 * tip2[1])
    lagrangian = kinetic - potential

    mass = sp.simplify(sp.hessian(kinetic, dq))
    dl_dq = sp.Matrix([lagrangian]).jacobian(q).T
    dl_ddq = sp.Matrix([lagrangian]).jacobian(dq).T
    rhs = sp.simplify(dl_dq - dl_ddq.jacobian(q) * dq)
    accel = mass.LUsolve(rhs)

    state = [th1, om1, th2, om2]
    field = sp.Matrix([om1, accel[0], om2, accel[1]])
    jac = field.jacobian(state)
    params = [m1, m2, L1, L2, g]
    f_num = sp.lambdify((state, params), list(field), modules="math", cse=True)
    j_num = sp.lambdify((state, params), jac.tolist(), modules="math", cse=True)
    return f_num, j_num


def impact_ratio(params: Mapping[str, float]) -> float:
    """Return ``M12 / M11`` of the mass matrix at ``theta2 = 0``.

    This is the coefficient ``k`` in the stop reset
    ``(omega1, omega2) -> (omega1 + k (1 + c) omega2, -c omega2)``.
    """

    p = {**DEFAULT_PARAMS, **params}
    m1, m2, l1, l2 = p["m1"], p["m2"], p["L1"], p["L2"]
    m11 = (m1 + m2) * l1**2 + m2 * l2**2 + 2 * m2 * l1 * l2
    m12 = m2 * l2**2 + m2 * l1 * l2
    return m12 / m11


class DoublePendulumField(VectorField):
    """Unforced double pendulum; analytic Jacobian from the symbolic model."""

    state_dim = 4

    def __init__(self, params: Mapping[str, float] | None = None, input_dim: int = 0):
        merged = {**DEFAULT_PARAMS, **(params or {})}
        for name in PARAM_NAMES:
            if merged[name] <= 0:
                raise ValueError(f"double pendulum parameter {name} must be positive")
        self.params = {name: float(merged[name]) for name in PARAM_NAMES}
        self._values = [self.params[name] for name in PARAM_NAMES]
        self.input_dim = input_dim
        self._f, self._j = _lambdified()

    @classmethod
    def from_params(
        cls, params: Mapping[str, Any], state_dim: int, input_dim: int
    ) -> DoublePendulumField:
        if state_dim != 4:
            raise ValueError(f"double pendulum needs state_dim 4, got {state_dim}")
        physical = {k: float(v) for k, v in params.items() if k in PARAM_NAMES}
        return cls(physical, input_dim=input_dim)

    def __call__(self, x: Array, u: Array) -> Array:
        return np.array(self._f(x, self._values), dtype=float)

    def jacobian(self, x: Array, u: Array) -> Array:
        return np.array(self._j(x, self._values), dtype=float)


__all__ = ["DEFAULT_PARAMS", "DoublePendulumField", "PARAM_NAMES", "impact_ratio"]
