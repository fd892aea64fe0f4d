"""Transition functions and the relaxed vector fields.

Across the strip of edge ``e`` the source field is blended with the target
field transported through ``A_bar``:

    f_e_eps(x, u) = (1 - phi) f_j(x, u) + phi A_bar^{-1} f_j'(R_bar_eps(x), u)

with ``phi = phi(g_e(x) / eps)``. Rank-deficient edges use the augmented field
over ``(x, z)`` with the minimal-norm right inverse of ``[A_bar | V]``.
"""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .fields import Array
from .geometry import (
    EdgeGeometry,
    RankDeficientEdgeError,
    Region,
    RegionKind,
    SystemGeometry,
)
from .model import EdgeKind, HybridSystem

LOGGER = logging.getLogger(__name__)

FD_STEP = 1e-6


class TransitionKind(enum.Enum):
    SINE = "sine"
    SMOOTHSTEP = "smoothstep"


@dataclass(frozen=True)
class TransitionFunction:
    """Monotone C1 ramp from 0 on ``a <= 0`` to 1 on ``a >= 1``."""

    kind: TransitionKind = TransitionKind.SINE

    def value(self, a: float) -> float:
        if a <= 0.0:
            return 0.0
        if a >= 1.0:
            return 1.0
        if self.kind is TransitionKind.SINE:
            return 0.5 - 0.5 * math.cos(math.pi * a)
        return a * a * (3.0 - 2.0 * a)

    def derivative(self, a: float) -> float:
        if a <= 0.0 or a >= 1.0:
            return 0.0
        if self.kind is TransitionKind.SINE:
            return 0.5 * math.pi * math.sin(math.pi * a)
        return 6.0 * a * (1.0 - a)

    def second_derivative(self, a: float) -> float:
        if a <= 0.0 or a >= 1.0:
            return 0.0
        if self.kind is TransitionKind.SINE:
            return 0.5 * math.pi**2 * math.cos(math.pi * a)
        return 6.0 - 12.0 * a


@dataclass(frozen=True)
class RelaxationParams:
    eps: float
    transition: TransitionFunction = field(default_factory=TransitionFunction)
    solve_tol: float = 1e-10

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")


def phi(tf: TransitionFunction, a: float) -> float:
    return tf.value(a)


def phi_edge(tf: TransitionFunction, geom: EdgeGeometry, x: Array) -> float:
    """``phi(g_e(x) / eps)``."""

    return tf.value(geom.guard_value(x) / geom.eps)


def _fd_jacobian(fun: Callable[[Array], Array], x: Array) -> Array:
    n = x.shape[0]
    jac = np.empty((n, n))
    for i in range(n):
        step = FD_STEP * (1.0 + abs(x[i]))
        hi = x.copy()
        lo = x.copy()
        hi[i] += step
        lo[i] -= step
        jac[:, i] = (fun(hi) - fun(lo)) / (2.0 * step)
    return jac


class RelaxedSystem:
    """A hybrid system together with its relaxation at one ``eps``."""

    def __init__(
        self,
        system: HybridSystem,
        params: RelaxationParams,
        kinds: dict[int, EdgeKind] | None = None,
    ) -> None:
        self.system = system
        self.params = params
        self.tf = params.transition
        self.geometry = SystemGeometry(system, params.eps, kinds)

    @property
    def eps(self) -> float:
        return self.params.eps

    @property
    def z_dim(self) -> int:
        return self.geometry.z_dim

    def region(self, j: int, x: Array) -> Region:
        return self.geometry.membership(j, x)

    def active_edge(
        self, j: int, x: Array, region: Region | None = None
    ) -> EdgeGeometry | None:
        """Edge whose blend defines the chart field at ``x``, if any."""

        region = region if region is not None else self.region(j, x)
        if region.kind is RegionKind.INTERIOR:
            return None
        if region.edge is not None:
            return self.geometry.edge(region.edge)
        return self.geometry.extension_edge(j, x)

    def edge_field(self, geom: EdgeGeometry, x: Array, u: Array) -> Array:
        """``f_e_eps(x, u)`` for a full-rank edge."""

        if not geom.full_rank:
            raise RankDeficientEdgeError(
                f"edge {geom.id} is rank deficient; use augmented_field"
            )
        weight = self.tf.value(geom.guard_value(x) / geom.eps)
        if weight == 0.0:
            return self.system.mode(geom.source).field(x, u)
        moved = geom.solve(geom.target.field(geom.bar_reset(x), u))
        if weight == 1.0:
            return moved
        out: Array = (1.0 - weight) * self.system.mode(geom.source).field(x, u)
        return out + weight * moved

    def mode_field(self, j: int, x: Array, u: Array) -> Array:
        """``f_j_eps(x, u)`` on the relaxed chart of mode ``j``."""

        geom = self.active_edge(j, x)
        if geom is None:
            return self.system.mode(j).field(x, u)
        return self.edge_field(geom, x, u)

    def augmented_edge_field(
        self, geom: EdgeGeometry, x: Array, z: Array, u: Array
    ) -> Array:
        """``f_hat_eps((x, z), u)`` of length ``n + p``."""

        n, p = x.shape[0], geom.p
        if z.shape != (p,):
            raise ValueError(f"edge {geom.id}: z must have shape ({p},)")
        weight = self.tf.value(geom.guard_value(x) / geom.eps)
        out = np.zeros(n + p)
        if weight < 1.0:
            out[:n] = (1.0 - weight) * self.system.mode(geom.source).field(x, u)
        if weight > 0.0:
            target = geom.target.field(geom.tilde_reset(x, z), u)
            out += weight * (geom.A_tilde_pinv @ target)
        return out

    def _branch_jacobian(self, j: int, x: Array, u: Array) -> Array:
        mode = self.system.mode(j)
        jac = mode.field.jacobian(x, u)
        if jac is None:
            return _fd_jacobian(lambda y: mode.field(y, u), x)
        return np.asarray(jac, dtype=float)

    def edge_field_jacobian(self, geom: EdgeGeometry, x: Array, u: Array) -> Array:
        """Chain-rule Jacobian of ``f_e_eps`` with respect to ``x``."""

        a = geom.guard_value(x) / geom.eps
        weight = self.tf.value(a)
        if weight == 0.0:
            return self._branch_jacobian(geom.source, x, u)
        y = geom.bar_reset(x)
        target_jac = self._branch_jacobian(geom.target_id, y, u)
        moved_jac = geom.solve(target_jac @ geom.A_bar)
        if weight == 1.0:
            return moved_jac
        f_j = self.system.mode(geom.source).field(x, u)
        moved = geom.solve(geom.target.field(y, u))
        slope = self.tf.derivative(a) / geom.eps
        jac: Array = (1.0 - weight) * self._branch_jacobian(geom.source, x, u)
        jac = jac + weight * moved_jac
        return jac + np.outer(moved - f_j, geom.edge.guard_normal) * slope

    def mode_field_jacobian(self, j: int, x: Array, u: Array) -> Array:
        geom = self.active_edge(j, x)
        if geom is None:
            return self._branch_jacobian(j, x, u)
        return self.edge_field_jacobian(geom, x, u)

    def augmented_edge_jacobian(
        self, geom: EdgeGeometry, x: Array, z: Array, u: Array
    ) -> Array:
        """Jacobian of ``f_hat_eps`` with respect to ``(x, z)``."""

        n, p = x.shape[0], geom.p
        a = geom.guard_value(x) / geom.eps
        weight = self.tf.value(a)
        jac = np.zeros((n + p, n + p))
        base = np.zeros(n + p)
        if weight < 1.0:
            jac[:n, :n] = (1.0 - weight) * self._branch_jacobian(geom.source, x, u)
            base[:n] = self.system.mode(geom.source).field(x, u)
        if weight > 0.0:
            y = geom.tilde_reset(x, z)
            target_jac = self._branch_jacobian(geom.target_id, y, u)
            jac += weight * (geom.A_tilde_pinv @ target_jac @ geom.A_tilde)
            slope = self.tf.derivative(a) / geom.eps
            if slope:
                moved = geom.A_tilde_pinv @ geom.target.field(y, u)
                jac[:, :n] += np.outer(moved - base, geom.edge.guard_normal) * slope
        return jac


def relaxed_edge_field(
    relaxed: RelaxedSystem, e: int, x: Array, u: Array
) -> Array:
    return relaxed.edge_field(relaxed.geometry.edge(e), x, u)


def relaxed_mode_field(relaxed: RelaxedSystem, j: int, x: Array, u: Array) -> Array:
    return relaxed.mode_field(j, x, u)


def augmented_field(
    relaxed: RelaxedSystem, e: int, x: Array, z: Array, u: Array
) -> Array:
    return relaxed.augmented_edge_field(relaxed.geometry.edge(e), x, z, u)


__all__ = [
    "RelaxationParams",
    "RelaxedSystem",
    "TransitionFunction",
    "TransitionKind",
    "augmented_field",
    "phi",
    "phi_edge",
    "relaxed_edge_field",
    "relaxed_mode_field",
]
