"""Quotient-space distances and first-order sensitivity of discrete runs."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg
import scipy.optimize

from .execution import AugmentedDynamics, RelaxedDynamics
from .fields import Array
from .geometry import EdgeGeometry, RegionKind
from .integrators import IntegratorScheme, NumericalError, step_jacobian
from .model import InputSignal
from .relaxation import RelaxedSystem
from .trajectory import Trajectory

LOGGER = logging.getLogger(__name__)

Norm = Literal["euclidean", "max"]

HOP_TOL = 1e-10
HORIZON_RTOL = 1e-9


class UnsupportedChartError(RuntimeError):
    """Raised when a sensitivity nominal leaves its chart through a reset."""


class HorizonMismatchError(ValueError):
    """Raised when two trajectories do not cover the same time interval."""


@dataclass(frozen=True, eq=False)
class HybridPoint:
    """A point of the relaxed quotient space, held in the chart of ``mode``."""

    mode: int
    x: Array
    z: Array | None = None


def _ord(norm: Norm) -> float:
    if norm == "euclidean":
        return 2.0
    if norm == "max":
        return math.inf
    raise ValueError(f"unknown norm {norm!r}")


def _dual(norm: Norm, v: Array) -> float:
    """Dual norm of ``v``; bounds ``|v . d| <= dual(v) * ||d||``."""

    return float(np.linalg.norm(v, 2.0 if norm == "euclidean" else 1.0))


def canonicalize(relaxed: RelaxedSystem, p: HybridPoint) -> HybridPoint:
    """Map a point of a projected domain to the target point it stands for."""

    region = relaxed.region(p.mode, p.x)
    if region.kind is not RegionKind.PROJECTED or region.edge is None:
        return p
    geom = relaxed.geometry.edge(region.edge)
    if geom.full_rank or p.z is None:
        return HybridPoint(geom.target_id, geom.bar_reset(p.x))
    blk = relaxed.geometry.z_slices[geom.id]
    return HybridPoint(geom.target_id, geom.tilde_reset(p.x, p.z[blk]))


def _facet_constraints(geom: EdgeGeometry) -> tuple[Array, Array, Array, Array]:
    """Relaxed guard facet as ``w = w0 + B s`` with ``C s <= d``."""

    normal = geom.edge.guard_normal
    w0: Array = normal * (geom.edge.guard_offset + geom.eps)
    basis: Array = scipy.linalg.null_space(normal[None, :])
    if len(geom.facet_h):
        # P(w) = w - normal * eps on the relaxed plane
        C = geom.facet_H @ basis
        d = geom.facet_h - geom.facet_H @ (w0 - normal * geom.eps)
    else:
        C = np.zeros((0, basis.shape[1]))
        d = np.zeros(0)
    return w0, basis, C, d


def _hop(
    geom: EdgeGeometry, a: Array, b: Array, norm: Norm, bound: float
) -> float:
    """``min_w ||a - w|| + ||R_bar_eps(w) - b||`` over the relaxed guard facet."""

    order = _ord(norm)
    lower = abs(geom.relaxed_guard_value(a)) / _dual(norm, geom.edge.guard_normal)
    lower += abs(geom.receiving_value(b)) / _dual(norm, geom.receiving_normal)
    if lower >= bound:
        return math.inf
    w0, basis, C, d = _facet_constraints(geom)

    def cost(s: Array) -> float:
        w = w0 + basis @ s
        return float(
            np.linalg.norm(a - w, order)
            + np.linalg.norm(geom.bar_reset(w) - b, order)
        )

    def feasible(s: Array) -> bool:
        scale = 1e-12 * (1.0 + float(np.max(np.abs(s), initial=0.0)))
        return bool(np.all(C @ s <= d + scale))

    starts = [basis.T @ (a - w0)]
    if geom.full_rank:
        starts.append(basis.T @ (geom.solve(b - geom.b_bar_eps) - w0))
    best = math.inf
    best_s: Array | None = None
    for s in starts:
        if feasible(s):
            value = cost(s)
            if value == 0.0:
                return 0.0
            if value < best:
                best, best_s = value, s
    if best_s is None:
        if not len(d):
            best_s = starts[0]
        else:
            lp = scipy.optimize.linprog(
                np.zeros(basis.shape[1]), A_ub=C, b_ub=d, bounds=(None, None)
            )
            if not lp.success:
                return math.inf
            best_s = lp.x
    constraints = (
        [{"type": "ineq", "fun": lambda s: d - C @ s, "jac": lambda s: -C}]
        if len(d)
        else []
    )
    result = scipy.optimize.minimize(
        cost,
        best_s,
        method="SLSQP",
        constraints=constraints,
        options={"ftol": HOP_TOL, "maxiter": 500},
    )
    if feasible(result.x):
        best = min(best, float(result.fun))
    else:
        LOGGER.debug("Hop over edge %s left the facet; keeping start value", geom.id)
        best = min(best, cost(best_s))
    return best


def quotient_distance(
    relaxed: RelaxedSystem,
    p: HybridPoint,
    q: HybridPoint,
    norm: Norm = "euclidean",
) -> float:
    """One-hop upper bound on the quotient distance between ``p`` and ``q``.

    Same-mode points use the chart norm; points of adjacent modes use the
    shortest path through one relaxed guard. Returns ``inf`` for modes that
    are neither identical nor adjacent.
    """

    order = _ord(norm)
    p, q = canonicalize(relaxed, p), canonicalize(relaxed, q)
    best = math.inf
    if p.mode == q.mode:
        best = float(np.linalg.norm(p.x - q.x, order))
        if best == 0.0:
            return 0.0
    geometry = relaxed.geometry
    for start, end in ((p, q), (q, p)):
        for geom in geometry.outgoing[start.mode]:
            if geom.target_id != end.mode:
                continue
            best = min(best, _hop(geom, start.x, end.x, norm, best))
    return best


def _check_horizons(X1: Trajectory, X2: Trajectory) -> None:
    t1, t2 = float(X1.t[0]), float(X2.t[0])
    T1, T2 = X1.horizon, X2.horizon
    scale = HORIZON_RTOL * max(1.0, abs(T1), abs(T2))
    if abs(t1 - t2) > scale or abs(T1 - T2) > scale:
        raise HorizonMismatchError(
            f"trajectories cover [{t1}, {T1}] and [{t2}, {T2}]"
        )


def trajectory_distance(
    relaxed: RelaxedSystem,
    X1: Trajectory,
    X2: Trajectory,
    norm: Norm = "euclidean",
) -> float:
    """Sup of the quotient distance over the union grid and event left limits."""

    _check_horizons(X1, X2)
    grid = np.union1d(X1.t, X2.t)
    grid = grid[grid <= min(X1.horizon, X2.horizon)]
    worst = 0.0

    def measure(a: tuple[int, Array, Array], b: tuple[int, Array, Array]) -> None:
        nonlocal worst
        pa = HybridPoint(a[0], a[1], a[2] if len(a[2]) else None)
        pb = HybridPoint(b[0], b[1], b[2] if len(b[2]) else None)
        worst = max(worst, quotient_distance(relaxed, pa, pb, norm))

    for t in grid:
        measure(X1.state_at(float(t)), X2.state_at(float(t)))
    for ev in [*X1.events, *X2.events]:
        measure(X1.left_state(ev.t), X2.left_state(ev.t))
    return worst


def rest_error(traj: Trajectory, t_from: float, norm: Norm = "max") -> float:
    """``sup_{t >= t_from} ||x(t)||`` over samples and event pre-states."""

    order = _ord(norm)
    values = [float(np.linalg.norm(traj.state_at(t_from)[1], order))]
    tail = traj.x[traj.t >= t_from]
    if len(tail):
        values.append(float(np.max(np.linalg.norm(tail, order, axis=1))))
    values.extend(
        float(np.linalg.norm(ev.pre, order)) for ev in traj.events if ev.t >= t_from
    )
    return max(values)


def contact_intervals(
    relaxed: RelaxedSystem,
    traj: Trajectory,
    e: int,
    band: float | None = None,
) -> list[tuple[float, float]]:
    """Maximal time intervals during which the run stays glued to edge ``e``.

    A sample is in contact when it lies within ``band`` (default ``2 eps``) of
    the guard plane in the source chart, or of the receiving plane in the
    target chart. Resets along ``e`` do not interrupt a contact, so a Zeno
    approach that ends trapped on the strip reads as one interval even when
    the elastic strip flow keeps hopping out of it by less than ``band``.
    """

    geom = relaxed.geometry.edge(e)
    band = 2.0 * relaxed.eps if band is None else band
    if band < 0:
        raise ValueError(f"band must be nonnegative, got {band}")
    source = traj.modes == geom.source
    target = traj.modes == geom.target_id
    glued = np.zeros(len(traj), dtype=bool)
    if np.any(source):
        values = traj.x[source] @ geom.edge.guard_normal - geom.edge.guard_offset
        glued[source] = values >= -band
    if np.any(target):
        values = traj.x[target] @ geom.receiving_normal - geom.receiving_offset
        glued[target] |= values >= -band

    runs: list[tuple[float, float]] = []
    begin: int | None = None
    for i, inside in enumerate(glued):
        if inside and begin is None:
            begin = i
        elif not inside and begin is not None:
            runs.append((float(traj.t[begin]), float(traj.t[i - 1])))
            begin = None
    if begin is not None:
        runs.append((float(traj.t[begin]), float(traj.t[-1])))
    return runs


def field_jacobian(relaxed: RelaxedSystem, j: int, x: Array, u: Array) -> Array:
    """Jacobian of the relaxed chart field of mode ``j`` at ``x``."""

    jac = relaxed.mode_field_jacobian(j, np.asarray(x, dtype=float), u)
    if not np.all(np.isfinite(jac)):
        raise NumericalError(f"non-finite Jacobian in mode {j} at {x}")
    return jac


@dataclass(frozen=True, eq=False)
class VariationalFlow:
    """Perturbation samples ``dx`` on the nominal grid and ``x0 + dx``."""

    t: Array
    dx: Array
    dz: Array
    approximation: Trajectory


def variational_flow(
    relaxed: RelaxedSystem,
    scheme: IntegratorScheme,
    nominal: Trajectory,
    dx0: Array,
    u: InputSignal | None = None,
) -> VariationalFlow:
    """Propagate ``dx0`` through the one-step Jacobians of ``scheme``.

    ``nominal`` must come from the fixed-step simulators with the same scheme
    and must not contain reset events.
    """

    if nominal.events:
        raise UnsupportedChartError(
            f"nominal has {len(nominal.events)} reset events; "
            "sensitivity is only defined within one chart"
        )
    dx0 = np.asarray(dx0, dtype=float)
    if dx0.shape != (nominal.state_dim,):
        raise ValueError(f"dx0 must have shape ({nominal.state_dim},)")
    u = u if u is not None else InputSignal.zero(relaxed.system.input_dim)
    dyn: RelaxedDynamics = (
        AugmentedDynamics(relaxed) if nominal.z_dim else RelaxedDynamics(relaxed)
    )
    n = nominal.state_dim
    count = len(nominal)
    dy = np.zeros((count, dyn.dim))
    dy[0, :n] = dx0
    for k in range(count - 1):
        j = int(nominal.modes[k])
        y = np.concatenate([nominal.x[k], nominal.z[k]])
        uk = u(float(nominal.t[k]))
        h = float(nominal.t[k + 1] - nominal.t[k])
        jac = step_jacobian(
            lambda v: dyn.field(j, v, uk),
            lambda v: dyn.jacobian(j, v, uk),
            y,
            h,
            scheme.kind,
        )
        dy[k + 1] = jac @ dy[k]
        if nominal.regions[k + 1] == "interior":
            dy[k + 1, n:] = 0.0
    approximation = Trajectory(
        t=nominal.t.copy(),
        modes=nominal.modes.copy(),
        x=nominal.x + dy[:, :n],
        regions=list(nominal.regions),
        z=nominal.z + dy[:, n:],
        events=[],
        termination=nominal.termination,
    )
    LOGGER.debug(
        "Variational flow over %d samples, final |dx|=%.3g",
        count,
        float(np.linalg.norm(dy[-1, :n])),
    )
    return VariationalFlow(nominal.t.copy(), dy[:, :n], dy[:, n:], approximation)


__all__ = [
    "HorizonMismatchError",
    "HybridPoint",
    "Norm",
    "UnsupportedChartError",
    "VariationalFlow",
    "canonicalize",
    "contact_intervals",
    "field_jacobian",
    "quotient_distance",
    "rest_error",
    "trajectory_distance",
    "variational_flow",
]
