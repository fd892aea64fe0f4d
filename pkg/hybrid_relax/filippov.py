"""Unrelaxed switched-system view of a transition."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .fields import Array
from .geometry import EdgeGeometry, RegionKind, SystemGeometry
from .model import HybridSystem


class RegionError(ValueError):
    """Raised when a sliding quantity is requested off a sliding point."""


class OutsideDomainError(ValueError):
    """Raised when a point lies outside the switched domain of its mode."""


class ContactKind(enum.Enum):
    CROSSING = "crossing"
    SLIDING = "sliding"
    ESCAPING = "escaping"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class RegionTag:
    """Contact classification with the two normal components that decided it."""

    kind: ContactKind
    a1: float
    a2: float


def classify_normals(a1: float, a2: float) -> ContactKind:
    if a1 * a2 > 0:
        return ContactKind.CROSSING
    if a1 > 0 and a2 < 0:
        return ContactKind.SLIDING
    if a1 <= 0 and a2 >= 0:
        return ContactKind.ESCAPING
    return ContactKind.DEGENERATE


def projected_field(
    system: HybridSystem, geom: EdgeGeometry, x: Array, u: Array
) -> Array:
    """``f_e(x, u) = A_bar^{-1} f_j'(R_bar_e(x), u)``."""

    target = system.mode(geom.target_id)
    return geom.solve(target.field(geom.bar_reset_unrelaxed(x), u))


def normal_components(
    system: HybridSystem, geom: EdgeGeometry, x: Array, u: Array
) -> tuple[float, float, Array, Array]:
    f_j = system.mode(geom.source).field(x, u)
    f_e = projected_field(system, geom, x, u)
    g = geom.edge.guard_normal
    return float(g @ f_j), float(g @ f_e), f_j, f_e


def classify_region(
    system: HybridSystem, geom: EdgeGeometry, x: Array, u: Array
) -> RegionTag:
    a1, a2, _, _ = normal_components(system, geom, x, u)
    return RegionTag(classify_normals(a1, a2), a1, a2)


def sliding_field(
    system: HybridSystem, geom: EdgeGeometry, x: Array, u: Array
) -> tuple[float, Array]:
    """Return the Filippov coefficient ``alpha`` and sliding field ``f_s``."""

    a1, a2, f_j, f_e = normal_components(system, geom, x, u)
    kind = classify_normals(a1, a2)
    if kind is not ContactKind.SLIDING:
        raise RegionError(f"edge {geom.id}: point is {kind.value}, not sliding")
    alpha = a1 / (a1 - a2)
    return alpha, (1.0 - alpha) * f_j + alpha * f_e


def switched_field(
    system: HybridSystem, geometry: SystemGeometry, j: int, x: Array, u: Array
) -> Array:
    """Switched field on ``D_j`` and the projected domains ``D_e``.

    ``geometry`` is expected to be built with ``eps = 0``.
    """

    region = geometry.membership(j, x)
    if region.kind is RegionKind.INTERIOR:
        return system.mode(j).field(x, u)
    if region.kind is RegionKind.OUTSIDE or region.edge is None:
        raise OutsideDomainError(f"x={np.array2string(x)} is outside mode {j}")
    return projected_field(system, geometry.edge(region.edge), x, u)


__all__ = [
    "ContactKind",
    "OutsideDomainError",
    "RegionError",
    "RegionTag",
    "classify_normals",
    "classify_region",
    "normal_components",
    "projected_field",
    "sliding_field",
    "switched_field",
]
