"""Affine geometry of transitions: projections, relaxed resets and membership.

Every edge ``e`` gets a receiving normal ``n_r`` (the partner's guard normal
for reversible edges, the target facet normal otherwise) and the change of
basis

    A_bar = A (I - g g^T) - n_r g^T,    b_bar = A g c + b + n_r c,

so that ``R_bar_eps(x) = A_bar x + b_bar + n_r eps`` equals
``R(P(x)) - n_r g_eps(x)`` and the receiving plane value of the image is
``eps - g(x)``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fields import Array
from .model import Edge, EdgeKind, HybridSystem, Mode, classify_edge

LOGGER = logging.getLogger(__name__)

RANK_RTOL = 1e-9


class GeometryError(ValueError):
    """Raised when an edge admits no usable change of basis."""


class RankDeficientEdgeError(GeometryError):
    """Raised when a full-rank operation is requested on a rank-deficient edge.

    Such edges are simulated on the augmented state, see ``simulate_augmented``.
    """


class RegionKind(enum.IntEnum):
    INTERIOR = 0
    STRIP = 1
    PROJECTED = 2
    OUTSIDE = 3


@dataclass(frozen=True)
class Region:
    kind: RegionKind
    mode: int
    edge: int | None = None

    @property
    def tag(self) -> str:
        if self.kind is RegionKind.INTERIOR:
            return "interior"
        if self.kind is RegionKind.OUTSIDE:
            return "outside"
        return f"{self.kind.name.lower()}:{self.edge}"


def guard_value(edge: Edge, x: Array) -> float:
    return edge.guard_value(x)


def relaxed_guard_value(edge: Edge, eps: float, x: Array) -> float:
    return edge.guard_value(x) - eps


def project_to_guard_plane(edge: Edge, x: Array) -> Array:
    """Orthogonal projection ``P_e(x)`` onto the guard plane."""

    out: Array = x - edge.guard_normal * edge.guard_value(x)
    return out


@dataclass(frozen=True, eq=False)
class EdgeGeometry:
    """Precomputed change-of-basis data for one edge at relaxation width ``eps``."""

    edge: Edge
    kind: EdgeKind
    eps: float
    receiving_normal: Array
    receiving_offset: float
    A_bar: Array
    b_bar: Array
    b_bar_eps: Array
    rank: int
    null_basis: Array
    A_tilde: Array
    A_tilde_pinv: Array
    z_bound: float
    facet_H: Array
    facet_h: Array
    target: Mode
    lu: tuple[Array, Array] | None

    @property
    def id(self) -> int:
        return self.edge.id

    @property
    def source(self) -> int:
        return self.edge.source

    @property
    def target_id(self) -> int:
        return self.edge.target

    @property
    def p(self) -> int:
        """Dimension of the auxiliary state needed by this edge."""

        return int(self.null_basis.shape[1])

    @property
    def full_rank(self) -> bool:
        return self.p == 0

    def guard_value(self, x: Array) -> float:
        return self.edge.guard_value(x)

    def relaxed_guard_value(self, x: Array) -> float:
        return self.edge.guard_value(x) - self.eps

    def project(self, x: Array) -> Array:
        return project_to_guard_plane(self.edge, x)

    def in_facet(self, x: Array, tol: float = 1e-12) -> bool:
        """Whether ``P_e(x)`` lies in the guard facet."""

        if not len(self.facet_h):
            return True
        p = self.project(x)
        scale = tol * (1.0 + float(np.max(np.abs(p))))
        return bool(np.all(self.facet_H @ p <= self.facet_h + scale))

    def receiving_value(self, y: Array) -> float:
        """Signed distance of ``y`` to the receiving plane in the target chart."""

        return float(self.receiving_normal @ y - self.receiving_offset)

    def bar_reset(self, x: Array) -> Array:
        """``R_bar_eps(x) = A_bar x + b_bar_eps``."""

        out: Array = self.A_bar @ x + self.b_bar_eps
        return out

    def bar_reset_unrelaxed(self, x: Array) -> Array:
        out: Array = self.A_bar @ x + self.b_bar
        return out

    def solve(self, y: Array) -> Array:
        """Return ``A_bar^{-1} y``."""

        if self.lu is None:
            raise RankDeficientEdgeError(
                f"edge {self.id} has rank {self.rank}; use the augmented field"
            )
        out: Array = scipy.linalg.lu_solve(self.lu, y, check_finite=False)
        return out

    def tilde_reset(self, x: Array, z: Array) -> Array:
        out: Array = self.A_bar @ x + self.null_basis @ z + self.b_bar_eps
        return out

    def augmented_reset(self, x: Array, z: Array) -> tuple[Array, Array]:
        """``R_hat_eps(x, z) = (R_tilde_eps(x, z), 0)``."""

        if z.shape != (self.p,):
            raise ValueError(f"edge {self.id}: z must have shape ({self.p},)")
        return self.tilde_reset(x, z), np.zeros(self.p)


def _orient(basis: Array) -> Array:
    out = basis.copy()
    for i in range(out.shape[1]):
        col = out[:, i]
        if col[np.argmax(np.abs(col))] < 0:
            out[:, i] = -col
    return out


def _facet_rows(mode: Mode, edge: Edge) -> tuple[Array, Array]:
    keep = [
        i
        for i, (row, off) in enumerate(zip(mode.H, mode.h))
        if not (
            np.allclose(row, edge.guard_normal, atol=1e-10)
            and abs(off - edge.guard_offset) <= 1e-10
        )
    ]
    return mode.H[keep], mode.h[keep]


def build_edge_geometry(
    system: HybridSystem,
    e: int,
    eps: float,
    kind: EdgeKind | None = None,
) -> EdgeGeometry:
    """Compute ``A_bar``, ``b_bar_eps``, null basis, right inverse and z bound."""

    if eps < 0:
        raise GeometryError(f"eps must be nonnegative, got {eps}")
    edge = system.edge(e)
    kind = kind if kind is not None else classify_edge(system, e)
    n = system.state_dim
    g = edge.guard_normal
    c = edge.guard_offset
    if kind is EdgeKind.REVERSIBLE:
        assert edge.partner is not None
        partner = system.edge(edge.partner)
        n_r, d_r = partner.guard_normal, partner.guard_offset
    else:
        if edge.target_normal is None or edge.target_offset is None:
            raise GeometryError(f"edge {e} is non-reversible but has no target facet")
        n_r, d_r = edge.target_normal, edge.target_offset

    A_bar = edge.A @ (np.eye(n) - np.outer(g, g)) - np.outer(n_r, g)
    b_bar = edge.A @ g * c + edge.b + n_r * c
    b_bar_eps = b_bar + n_r * eps

    svals = scipy.linalg.svdvals(A_bar)
    rank = int(np.sum(svals > RANK_RTOL * svals[0])) if svals[0] > 0 else 0
    if rank < n:
        if kind is EdgeKind.REVERSIBLE:
            raise GeometryError(
                f"reversible edge {e} has singular change of basis "
                f"(sigma_min/sigma_max = {svals[-1] / svals[0]:.3e})"
            )
        null_basis = _orient(scipy.linalg.null_space(A_bar.T, rcond=RANK_RTOL))
        lu = None
    else:
        null_basis = np.zeros((n, 0))
        lu = scipy.linalg.lu_factor(A_bar, check_finite=False)
    A_tilde = np.hstack([A_bar, null_basis])
    A_tilde_pinv = scipy.linalg.pinv(A_tilde)

    target = system.mode(edge.target)
    verts = target.vertices
    reach = float(np.max(np.abs(verts))) if len(verts) else 0.0
    z_bound = float(np.sqrt(n) * (reach + np.max(np.abs(b_bar_eps))))

    facet_H, facet_h = _facet_rows(system.mode(edge.source), edge)
    LOGGER.debug(
        "Edge %s geometry: %s, rank %d, p=%d, M=%.3g",
        e,
        kind.value,
        rank,
        n - rank,
        z_bound,
    )
    return EdgeGeometry(
        edge=edge,
        kind=kind,
        eps=eps,
        receiving_normal=n_r,
        receiving_offset=d_r,
        A_bar=A_bar,
        b_bar=b_bar,
        b_bar_eps=b_bar_eps,
        rank=rank,
        null_basis=null_basis,
        A_tilde=A_tilde,
        A_tilde_pinv=A_tilde_pinv,
        z_bound=z_bound,
        facet_H=facet_H,
        facet_h=facet_h,
        target=target,
        lu=lu,
    )


def bar_reset(geom: EdgeGeometry, x: Array) -> Array:
    """``R_bar_e^eps(x)``; a geometry built with ``eps = 0`` gives ``R_bar_e``."""

    return geom.bar_reset(x)


def augmented_reset(geom: EdgeGeometry, x: Array, z: Array) -> tuple[Array, Array]:
    return geom.augmented_reset(x, z)


class SystemGeometry:
    """Edge geometries of a whole system at one ``eps`` plus the z layout.

    Rank-deficient edges each own a block of the global auxiliary state, laid
    out in edge id order.
    """

    def __init__(
        self,
        system: HybridSystem,
        eps: float,
        kinds: dict[int, EdgeKind] | None = None,
    ) -> None:
        self.system = system
        self.eps = eps
        kinds = kinds or {}
        self.edges: dict[int, EdgeGeometry] = {
            edge.id: build_edge_geometry(system, edge.id, eps, kinds.get(edge.id))
            for edge in sorted(system.edges, key=lambda e: e.id)
        }
        self.outgoing: dict[int, tuple[EdgeGeometry, ...]] = {
            mode.id: tuple(self.edges[e.id] for e in system.outgoing(mode.id))
            for mode in system.modes
        }
        self._guards: dict[int, tuple[Array, Array]] = {}
        for j, geoms in self.outgoing.items():
            if geoms:
                G = np.array([geom.edge.guard_normal for geom in geoms])
                c = np.array([geom.edge.guard_offset for geom in geoms])
            else:
                G = np.zeros((0, system.state_dim))
                c = np.zeros(0)
            self._guards[j] = (G, c)
        self.z_slices: dict[int, slice] = {}
        offset = 0
        for e, geom in self.edges.items():
            if not geom.full_rank:
                self.z_slices[e] = slice(offset, offset + geom.p)
                offset += geom.p
        self.z_dim = offset

    def edge(self, e: int) -> EdgeGeometry:
        return self.edges[e]

    def guard_values(self, j: int, x: Array) -> Array:
        """Guard values of all edges leaving ``j``, in edge id order."""

        G, c = self._guards[j]
        out: Array = G @ x - c
        return out

    def membership(self, j: int, x: Array) -> Region:
        """Classify ``x`` within the relaxed chart of mode ``j``.

        Precedence is interior, then strip, then projected domain; among
        edges the lowest id wins.
        """

        mode = self.system.mode(j)
        if mode.contains(x):
            return Region(RegionKind.INTERIOR, j)
        geoms = self.outgoing[j]
        if not geoms:
            return Region(RegionKind.OUTSIDE, j)
        gvals = self.guard_values(j, x)
        tol = 1e-12 * (1.0 + float(np.max(np.abs(x))))
        for geom, g in zip(geoms, gvals):
            if -tol <= g <= self.eps + tol and geom.in_facet(x):
                return Region(RegionKind.STRIP, j, geom.id)
        for geom, g in zip(geoms, gvals):
            if g >= self.eps - tol and geom.target.contains(geom.bar_reset(x)):
                return Region(RegionKind.PROJECTED, j, geom.id)
        return Region(RegionKind.OUTSIDE, j)

    def extension_edge(self, j: int, x: Array) -> EdgeGeometry | None:
        """Edge whose field extends the chart at a point outside it.

        The edge with the largest positive guard value, or ``None`` to fall
        back on ``f_j``.
        """

        geoms = self.outgoing[j]
        if not geoms:
            return None
        gvals = self.guard_values(j, x)
        best = int(np.argmax(gvals))
        return geoms[best] if gvals[best] > 0 else None


def membership(geometry: SystemGeometry, j: int, x: Array) -> Region:
    return geometry.membership(j, x)


__all__ = [
    "EdgeGeometry",
    "GeometryError",
    "RankDeficientEdgeError",
    "Region",
    "RegionKind",
    "SystemGeometry",
    "augmented_reset",
    "bar_reset",
    "build_edge_geometry",
    "guard_value",
    "membership",
    "project_to_guard_plane",
    "relaxed_guard_value",
]
