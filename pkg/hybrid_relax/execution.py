"""Trajectory constructors for relaxed, augmented and Filippov executions.

The fixed-step and adaptive simulators share one chart-dynamics object:
``RelaxedDynamics`` over ``x`` or ``AugmentedDynamics`` over ``(x, z)``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from typing import Any

import numpy as np
from scipy.integrate import solve_ivp

from .fields import Array
from .filippov import ContactKind, classify_normals, normal_components
from .geometry import (
    EdgeGeometry,
    RankDeficientEdgeError,
    Region,
    RegionKind,
    SystemGeometry,
)
from .integrators import IntegratorScheme, NumericalError, step
from .model import HybridSystem, InputSignal, Mode
from .relaxation import RelaxedSystem
from .trajectory import Termination, TerminationKind, Trajectory, TrajectoryRecorder

LOGGER = logging.getLogger(__name__)

EVENT_BUDGET = 1_000_000
MAX_BISECTIONS = 200
MAX_STALLED_CONTACTS = 10_000

EventFn = Callable[[float, Array], float]


class ConsistencyError(RuntimeError):
    """Raised when a reset lands outside the target chart."""


class EventBudgetError(RuntimeError):
    """Raised when a run exceeds its discrete event budget."""


class FilippovUndefined(RuntimeError):
    """Raised when the Filippov solution does not exist past a contact."""


def _guard_tol(x: Array) -> float:
    return 1e-12 * (1.0 + float(np.linalg.norm(x)))


class RelaxedDynamics:
    """Chart dynamics ``f_j_eps`` over the state ``x``."""

    def __init__(self, relaxed: RelaxedSystem) -> None:
        self.relaxed = relaxed
        self.geometry = relaxed.geometry
        self.n = relaxed.system.state_dim
        self.q = 0

    @property
    def dim(self) -> int:
        return self.n + self.q

    def region(self, j: int, y: Array) -> Region:
        return self.geometry.membership(j, y[: self.n])

    def field(self, j: int, y: Array, u: Array) -> Array:
        return self.relaxed.mode_field(j, y, u)

    def jacobian(self, j: int, y: Array, u: Array) -> Array:
        return self.relaxed.mode_field_jacobian(j, y, u)

    def reset(self, geom: EdgeGeometry, y: Array) -> Array:
        return geom.bar_reset(y)

    def settle(self, region: Region, y: Array) -> Array:
        return y

    def z_exceeded(self, y: Array) -> bool:
        return False

    def z_of(self, y: Array) -> Array | None:
        return None


class AugmentedDynamics(RelaxedDynamics):
    """Dynamics over ``(x, z)`` with one z block per rank-deficient edge."""

    def __init__(self, relaxed: RelaxedSystem) -> None:
        super().__init__(relaxed)
        self.q = relaxed.z_dim
        self._blocks = {
            e: slice(self.n + sl.start, self.n + sl.stop)
            for e, sl in self.geometry.z_slices.items()
        }

    def field(self, j: int, y: Array, u: Array) -> Array:
        n = self.n
        x = y[:n]
        out = np.zeros(self.dim)
        geom = self.relaxed.active_edge(j, x)
        if geom is None:
            out[:n] = self.relaxed.system.mode(j).field(x, u)
        elif geom.full_rank:
            out[:n] = self.relaxed.edge_field(geom, x, u)
        else:
            blk = self._blocks[geom.id]
            w = self.relaxed.augmented_edge_field(geom, x, y[blk], u)
            out[:n] = w[:n]
            out[blk] = w[n:]
        return out

    def jacobian(self, j: int, y: Array, u: Array) -> Array:
        n = self.n
        x = y[:n]
        jac = np.zeros((self.dim, self.dim))
        geom = self.relaxed.active_edge(j, x)
        if geom is None or geom.full_rank:
            jac[:n, :n] = self.relaxed.mode_field_jacobian(j, x, u)
            return jac
        blk = self._blocks[geom.id]
        idx = np.r_[np.arange(n), np.arange(blk.start, blk.stop)]
        jac[np.ix_(idx, idx)] = self.relaxed.augmented_edge_jacobian(
            geom, x, y[blk], u
        )
        return jac

    def reset(self, geom: EdgeGeometry, y: Array) -> Array:
        x = y[: self.n]
        out = np.zeros(self.dim)
        if geom.full_rank:
            out[: self.n] = geom.bar_reset(x)
        else:
            out[: self.n] = geom.tilde_reset(x, y[self._blocks[geom.id]])
        return out

    def settle(self, region: Region, y: Array) -> Array:
        # Interior samples never read z and resets overwrite it, so zeroing
        # here only makes every later strip entry start from z = 0.
        if region.kind is RegionKind.INTERIOR and self.q:
            y = y.copy()
            y[self.n :] = 0.0
        return y

    def z_exceeded(self, y: Array) -> bool:
        for e, blk in self._blocks.items():
            if np.max(np.abs(y[blk])) > self.geometry.edge(e).z_bound:
                return True
        return False

    def z_of(self, y: Array) -> Array | None:
        out: Array = y[self.n :]
        return out

    def z_block(self, e: int) -> slice | None:
        return self._blocks.get(e)


def _check_start(dyn: RelaxedDynamics, j0: int, y0: Array) -> Region:
    region = dyn.region(j0, y0)
    if region.kind in (RegionKind.OUTSIDE, RegionKind.PROJECTED):
        raise ValueError(
            f"initial state {np.array2string(y0[: dyn.n])} is not in the chart of "
            f"mode {j0} ({region.tag})"
        )
    return region


def _first_crossing(
    dyn: RelaxedDynamics, j: int, y_prev: Array, y_next: Array
) -> EdgeGeometry | None:
    """Edge whose relaxed guard the step crosses first, ties by lowest id."""

    x0, x1 = y_prev[: dyn.n], y_next[: dyn.n]
    eps = dyn.geometry.eps
    tol = _guard_tol(x1)
    best: tuple[float, int] | None = None
    chosen = None
    for geom in dyn.geometry.outgoing[j]:
        g1 = geom.guard_value(x1)
        if g1 < eps - tol or not geom.target.contains(geom.bar_reset(x1)):
            continue
        g0 = geom.guard_value(x0)
        frac = (eps - g0) / (g1 - g0) if g1 > g0 else 0.0
        key = (frac, geom.id)
        if best is None or key < best:
            best, chosen = key, geom
    return chosen


def _last_inside(dyn: RelaxedDynamics, j: int, y0: Array, y1: Array) -> float:
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if dyn.region(j, y0 + mid * (y1 - y0)).kind is RegionKind.OUTSIDE:
            hi = mid
        else:
            lo = mid
    return lo


def _apply_reset(
    dyn: RelaxedDynamics,
    rec: TrajectoryRecorder,
    t: float,
    j: int,
    y: Array,
    pre_tag: str,
    geom: EdgeGeometry,
) -> tuple[int, Array]:
    post = dyn.reset(geom, y)
    target = geom.target_id
    region = dyn.region(target, post)
    if region.kind is RegionKind.OUTSIDE:
        raise ConsistencyError(
            f"reset of edge {geom.id} at t={t:.17g} maps "
            f"{np.array2string(y[: dyn.n])} outside mode {target}"
        )
    post = dyn.settle(region, post)
    rec.event(
        t,
        geom.id,
        j,
        y[: dyn.n],
        pre_tag,
        target,
        post[: dyn.n],
        region.tag,
        pre_z=dyn.z_of(y),
        post_z=dyn.z_of(post),
    )
    LOGGER.debug("Event on edge %s at t=%.17g: mode %s -> %s", geom.id, t, j, target)
    return target, post


def _log_finish(label: str, traj: Trajectory) -> None:
    assert traj.termination is not None
    if traj.termination.kind is TerminationKind.HORIZON_REACHED:
        LOGGER.info(
            "%s run finished: %d samples, %d events, t=%.6g",
            label,
            len(traj),
            len(traj.events),
            traj.termination.t,
        )
    else:
        LOGGER.warning(
            "%s run terminated early (%s) at t=%.6g after %d events",
            label,
            traj.termination.kind.value,
            traj.termination.t,
            len(traj.events),
        )


def _steps_for(scheme: IntegratorScheme, T: float) -> int:
    count = int(round(T / scheme.h))
    if count < 1 or abs(count * scheme.h - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"horizon {T} is not a multiple of the step {scheme.h}")
    return count


def _run_discrete(
    dyn: RelaxedDynamics,
    scheme: IntegratorScheme,
    y0: Array,
    j0: int,
    u: InputSignal,
    T: float,
) -> Trajectory:
    steps = _steps_for(scheme, T)
    h, kind = scheme.h, scheme.kind
    y = np.array(y0, dtype=float)
    j = j0
    region = _check_start(dyn, j, y)
    rec = TrajectoryRecorder(dyn.n, dyn.q, capacity=steps + 16)
    rec.append(0.0, j, y[: dyn.n], region.tag, dyn.z_of(y))
    termination = Termination(TerminationKind.HORIZON_REACHED, T)
    for k in range(steps):
        t = k * h
        t_next = (k + 1) * h
        uk = u(t)
        mode = j
        try:
            gamma = step(lambda v: dyn.field(mode, v, uk), y, h, kind)
        except NumericalError as exc:
            raise NumericalError(f"mode {j} at t={t:.17g}: {exc}") from exc
        region = dyn.region(j, gamma)
        if region.kind is RegionKind.PROJECTED:
            geom = _first_crossing(dyn, j, y, gamma)
            if geom is None:  # pragma: no cover
                raise ConsistencyError(f"no crossing edge for projected point at {t}")
            pre_tag = f"projected:{geom.id}"
            j, y = _apply_reset(dyn, rec, t_next, j, gamma, pre_tag, geom)
        elif region.kind is RegionKind.OUTSIDE:
            frac = _last_inside(dyn, j, y, gamma)
            t_exit = t + frac * h
            if frac > 0.0:
                y = y + frac * (gamma - y)
                rec.append(t_exit, j, y[: dyn.n], dyn.region(j, y).tag, dyn.z_of(y))
            termination = Termination(TerminationKind.LEFT_DOMAIN, t_exit)
            break
        else:
            y = dyn.settle(region, gamma)
            rec.append(t_next, j, y[: dyn.n], region.tag, dyn.z_of(y))
        if dyn.z_exceeded(y):
            termination = Termination(TerminationKind.Z_BOUND_EXCEEDED, t_next)
            break
    traj = rec.build(termination)
    _log_finish("discrete", traj)
    return traj


def _event(fn: EventFn, direction: float) -> EventFn:
    fn.terminal = True  # type: ignore[attr-defined]
    fn.direction = direction  # type: ignore[attr-defined]
    return fn


def _guard_event(geom: EdgeGeometry, n: int, relaxed: bool) -> EventFn:
    if relaxed:
        return _event(lambda _t, v: geom.relaxed_guard_value(v[:n]), 1.0)
    return _event(lambda _t, v: geom.guard_value(v[:n]), 1.0)


def _chart_margin(geometry: SystemGeometry, j: int, n: int) -> EventFn:
    """Largest slack over ``D_j`` and its strips; negative outside the chart."""

    mode = geometry.system.mode(j)
    geoms = geometry.outgoing[j]

    def margin(_t: float, y: Array) -> float:
        x = y[:n]
        best = float(np.min(mode.slack(x)))
        for geom in geoms:
            slack = geom.guard_value(x)
            if len(geom.facet_h):
                p = geom.project(x)
                slack = min(slack, float(np.min(geom.facet_h - geom.facet_H @ p)))
            best = max(best, slack)
        return best

    return _event(margin, -1.0)


def _refine(
    sol: Any, fn: EventFn, t_lo: float, t_ev: float, y_ev: Array, n: int
) -> tuple[float, Array]:
    """Bisect on the dense output until ``|fn| <= 1e-12 (1 + |x|)``."""

    if abs(fn(t_ev, y_ev)) <= _guard_tol(y_ev[:n]):
        return t_ev, y_ev
    lo, hi = t_lo, t_ev
    f_lo = fn(lo, sol(lo))
    if fn(hi, sol(hi)) * f_lo > 0:
        hi = t_ev + (t_ev - t_lo)
        if fn(hi, sol(hi)) * f_lo > 0:
            return t_ev, y_ev
    t_best, y_best = t_ev, y_ev
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        y_mid = np.asarray(sol(mid), dtype=float)
        f_mid = fn(mid, y_mid)
        t_best, y_best = mid, y_mid
        if abs(f_mid) <= _guard_tol(y_mid[:n]):
            break
        if f_mid * f_lo > 0:
            lo = mid
        else:
            hi = mid
    LOGGER.debug("Event refined by bisection to t=%.17g", t_best)
    return t_best, y_best


def _fired(sol: Any) -> int | None:
    """Index of the earliest terminal event, lowest index on ties."""

    best: tuple[float, int] | None = None
    for i, times in enumerate(sol.t_events):
        if len(times):
            key = (float(times[0]), i)
            if best is None or key < best:
                best = key
    return None if best is None else best[1]


def _integrate(
    rhs: Callable[[float, Array], Array],
    t: float,
    t_end: float,
    y: Array,
    fns: list[EventFn],
    tol: float,
    method: str,
    max_step: float,
) -> Any:
    sol = solve_ivp(
        rhs,
        (t, t_end),
        y,
        method=method,
        rtol=tol,
        atol=tol,
        events=fns,
        dense_output=True,
        max_step=max_step,
    )
    if sol.status == -1:
        raise NumericalError(f"integration failed at t={t:.17g}: {sol.message}")
    return sol


def _run_reference(
    dyn: RelaxedDynamics,
    y0: Array,
    j0: int,
    u: InputSignal,
    T: float,
    tol: float,
    method: str,
    max_step: float,
    max_events: int,
) -> Trajectory:
    n = dyn.n
    geometry = dyn.geometry
    y = np.array(y0, dtype=float)
    j = j0
    region = _check_start(dyn, j, y)
    y = dyn.settle(region, y)
    rec = TrajectoryRecorder(n, dyn.q)
    rec.append(0.0, j, y[:n], region.tag, dyn.z_of(y))
    t = 0.0
    termination = Termination(TerminationKind.HORIZON_REACHED, T)
    while t < T:
        pending = u.breakpoints_between(t, T)
        t_end = pending[0] if pending else T
        uk = u(t)
        mode = j
        geoms = geometry.outgoing[j]
        fns = [_guard_event(geom, n, relaxed=True) for geom in geoms]
        fns.append(_chart_margin(geometry, j, n))
        if isinstance(dyn, AugmentedDynamics):
            # z only matters in the strip it was built in; zero it on the way out
            for geom in geoms:
                blk = dyn.z_block(geom.id)
                if blk is None or not np.any(y[blk]):
                    continue
                if geom.guard_value(y[:n]) > _guard_tol(y[:n]):
                    leave = _event(lambda _t, v, g=geom: g.guard_value(v[:n]), -1.0)
                    fns.append(leave)

        def rhs(_t: float, v: Array) -> Array:
            return dyn.field(mode, v, uk)

        sol = _integrate(rhs, t, t_end, y, fns, tol, method, max_step)
        fired = _fired(sol) if sol.status == 1 else None
        stop = -1 if fired is not None else None
        exceeded = False
        for ts, ys in zip(sol.t[1:stop], sol.y.T[1:stop]):
            rec.append(float(ts), j, ys[:n], dyn.region(j, ys).tag, dyn.z_of(ys))
            if dyn.z_exceeded(ys):
                exceeded = True
                break
        if exceeded:
            termination = Termination(TerminationKind.Z_BOUND_EXCEEDED, rec.last_t)
            break
        if fired is None:
            t, y = t_end, sol.y[:, -1].copy()
            continue
        t_ev = float(sol.t_events[fired][0])
        y_ev = np.asarray(sol.y_events[fired][0], dtype=float)
        t_lo = float(sol.t[-2]) if len(sol.t) > 1 else t
        t_ev, y_ev = _refine(sol.sol, fns[fired], t_lo, t_ev, y_ev, n)
        if fired < len(geoms) and geoms[fired].in_facet(y_ev[:n]):
            geom = geoms[fired]
            j, y = _apply_reset(dyn, rec, t_ev, j, y_ev, f"strip:{geom.id}", geom)
            if rec.event_count > max_events:
                raise EventBudgetError(f"more than {max_events} events by t={t_ev}")
        elif fired <= len(geoms):
            rec.append(t_ev, j, y_ev[:n], dyn.region(j, y_ev).tag, dyn.z_of(y_ev))
            termination = Termination(TerminationKind.LEFT_DOMAIN, t_ev)
            break
        else:
            y = dyn.settle(Region(RegionKind.INTERIOR, j), y_ev)
            rec.append(t_ev, j, y[:n], dyn.region(j, y).tag, dyn.z_of(y))
        t = t_ev
    traj = rec.build(termination)
    _log_finish("reference", traj)
    return traj


def _resolve_input(system: HybridSystem, u: InputSignal | None) -> InputSignal:
    return u if u is not None else InputSignal.zero(system.input_dim)


def _require_full_rank(relaxed: RelaxedSystem) -> None:
    if relaxed.z_dim:
        raise RankDeficientEdgeError(
            "system has rank-deficient edges; use simulate_augmented"
        )


def simulate_discrete(
    relaxed: RelaxedSystem,
    scheme: IntegratorScheme,
    x0: Array,
    j0: int,
    T: float,
    u: InputSignal | None = None,
) -> Trajectory:
    """Fixed-step discrete approximation that may step over whole strips.

    Each step lands either in the chart (accepted), in a projected domain
    (relaxed reset into the target mode) or outside (the run is truncated at
    the last in-chart point on the step segment).
    """

    _require_full_rank(relaxed)
    LOGGER.info(
        "Discrete run: %s h=%g eps=%g T=%g from mode %s",
        scheme.kind.value,
        scheme.h,
        relaxed.eps,
        T,
        j0,
    )
    u = _resolve_input(relaxed.system, u)
    return _run_discrete(RelaxedDynamics(relaxed), scheme, x0, j0, u, T)


def simulate_relaxed_reference(
    relaxed: RelaxedSystem,
    x0: Array,
    j0: int,
    T: float,
    u: InputSignal | None = None,
    tol: float = 1e-10,
    method: str = "DOP853",
    max_step: float = math.inf,
    max_events: int = EVENT_BUDGET,
) -> Trajectory:
    """Adaptive realization of the relaxed execution with event localization.

    Use ``method="Radau"`` for stiff strips (sliding at small ``eps``).
    """

    _require_full_rank(relaxed)
    LOGGER.info("Reference run: eps=%g tol=%g T=%g", relaxed.eps, tol, T)
    u = _resolve_input(relaxed.system, u)
    dyn = RelaxedDynamics(relaxed)
    return _run_reference(dyn, x0, j0, u, T, tol, method, max_step, max_events)


def simulate_augmented(
    relaxed: RelaxedSystem,
    x0: Array,
    j0: int,
    T: float,
    u: InputSignal | None = None,
    scheme: IntegratorScheme | None = None,
    tol: float | None = None,
    method: str = "DOP853",
    max_step: float = math.inf,
    max_events: int = EVENT_BUDGET,
) -> Trajectory:
    """Simulate on ``(x, z)``; ``z`` starts at zero and is zeroed by resets.

    Pass ``scheme`` for the fixed-step approximation or ``tol`` for the
    adaptive reference.
    """

    if (scheme is None) == (tol is None):
        raise ValueError("pass exactly one of scheme or tol")
    u = _resolve_input(relaxed.system, u)
    dyn = AugmentedDynamics(relaxed)
    y0 = np.concatenate([np.asarray(x0, dtype=float), np.zeros(dyn.q)])
    LOGGER.info(
        "Augmented run: eps=%g z_dim=%d T=%g (%s)",
        relaxed.eps,
        dyn.q,
        T,
        scheme.kind.value if scheme is not None else f"tol={tol}",
    )
    if scheme is not None:
        return _run_discrete(dyn, scheme, y0, j0, u, T)
    assert tol is not None
    return _run_reference(dyn, y0, j0, u, T, tol, method, max_step, max_events)


def _non_guard_rows(
    mode: Mode, geoms: tuple[EdgeGeometry, ...]
) -> tuple[Array, Array]:
    keep = [
        i
        for i, (row, off) in enumerate(zip(mode.H, mode.h))
        if not any(
            np.allclose(row, g.edge.guard_normal, atol=1e-10)
            and abs(off - g.edge.guard_offset) <= 1e-10
            for g in geoms
        )
    ]
    return mode.H[keep], mode.h[keep]


def _slack_event(H: Array, h: Array, project: Callable[[Array], Array]) -> EventFn:
    def slack(_t: float, v: Array) -> float:
        if not len(h):
            return 1.0
        return float(np.min(h - H @ project(v)))

    return _event(slack, -1.0)


class _FilippovRun:
    """Event-driven integration of the switched field, sliding included."""

    def __init__(
        self,
        system: HybridSystem,
        u: InputSignal,
        tol: float,
        method: str,
        max_step: float,
        max_contacts: int,
    ) -> None:
        self.system = system
        self.geometry = SystemGeometry(system, 0.0)
        self.u = u
        self.tol = tol
        self.method = method
        self.max_step = max_step
        self.max_contacts = max_contacts
        self.rec = TrajectoryRecorder(system.state_dim)
        self.sliding: EdgeGeometry | None = None

    def contact(
        self, t: float, j: int, x: Array, geom: EdgeGeometry
    ) -> tuple[int, Array]:
        a1, a2, _, _ = normal_components(self.system, geom, x, self.u(t))
        kind = classify_normals(a1, a2)
        if kind is ContactKind.CROSSING:
            post = geom.edge.reset(x)
            target = geom.target_id
            self.rec.event(t, geom.id, j, x, "interior", target, post, "interior")
            LOGGER.debug("Crossing on edge %s at t=%.17g", geom.id, t)
            return target, post
        if kind is ContactKind.SLIDING:
            self.sliding = geom
            self.rec.append(t, j, x, f"sliding:{geom.id}")
            LOGGER.debug("Sliding on edge %s from t=%.17g", geom.id, t)
            return j, x
        raise FilippovUndefined(
            f"{kind.value} contact on edge {geom.id} at t={t:.17g}, "
            f"x={np.array2string(x)} (a1={a1:.3g}, a2={a2:.3g})"
        )

    def start(self, j: int, x: Array) -> tuple[int, Array]:
        for geom in self.geometry.outgoing[j]:
            if abs(geom.guard_value(x)) <= _guard_tol(x) and geom.in_facet(x):
                return self.contact(0.0, j, geom.project(x), geom)
        self.rec.append(0.0, j, x, "interior")
        return j, x

    def flow_setup(
        self, j: int, uk: Array
    ) -> tuple[Callable[[float, Array], Array], list[EventFn]]:
        mode = self.system.mode(j)
        geoms = self.geometry.outgoing[j]
        n = self.system.state_dim
        fns = [_guard_event(geom, n, relaxed=False) for geom in geoms]
        H, h = _non_guard_rows(mode, geoms)
        fns.append(_slack_event(H, h, lambda v: v))
        return (lambda _t, v: mode.field(v, uk)), fns

    def slide_setup(
        self, geom: EdgeGeometry, uk: Array
    ) -> tuple[Callable[[float, Array], Array], list[EventFn]]:
        system = self.system

        def normals(v: Array) -> tuple[float, float, Array, Array]:
            return normal_components(system, geom, geom.project(v), uk)

        def rhs(_t: float, v: Array) -> Array:
            a1, a2, f_j, f_e = normals(v)
            alpha = a1 / (a1 - a2) if a1 != a2 else 0.5
            out: Array = (1.0 - alpha) * f_j + alpha * f_e
            return out

        fns = [
            _event(lambda _t, v: normals(v)[0], -1.0),
            _event(lambda _t, v: normals(v)[1], 1.0),
            _slack_event(geom.facet_H, geom.facet_h, geom.project),
        ]
        return rhs, fns

    def run(self, x0: Array, j0: int, T: float) -> Trajectory:
        j, x = self.start(j0, np.array(x0, dtype=float))
        t = 0.0
        stalled = 0
        termination = Termination(TerminationKind.HORIZON_REACHED, T)
        while t < T:
            pending = self.u.breakpoints_between(t, T)
            t_end = pending[0] if pending else T
            uk = self.u(t)
            sliding = self.sliding
            if sliding is None:
                rhs, fns = self.flow_setup(j, uk)
                tag = "interior"
            else:
                rhs, fns = self.slide_setup(sliding, uk)
                tag = f"sliding:{sliding.id}"
            sol = _integrate(
                rhs, t, t_end, x, fns, self.tol, self.method, self.max_step
            )
            fired = _fired(sol) if sol.status == 1 else None
            stop = -1 if fired is not None else None
            for ts, xs in zip(sol.t[1:stop], sol.y.T[1:stop]):
                point = sliding.project(xs) if sliding is not None else xs
                self.rec.append(float(ts), j, point, tag)
            if fired is None:
                t, x = t_end, sol.y[:, -1].copy()
                if sliding is not None:
                    x = sliding.project(x)
                continue
            t_ev = float(sol.t_events[fired][0])
            x_ev = np.asarray(sol.y_events[fired][0], dtype=float)
            t_lo = float(sol.t[-2]) if len(sol.t) > 1 else t
            t_ev, x_ev = _refine(sol.sol, fns[fired], t_lo, t_ev, x_ev, len(x_ev))
            stalled = stalled + 1 if t_ev - t <= 1e-12 * (1.0 + abs(t)) else 0
            if stalled > self.max_contacts:
                raise FilippovUndefined(
                    f"{stalled} contacts without progress at t={t_ev:.17g}"
                )
            t = t_ev
            if sliding is None:
                geoms = self.geometry.outgoing[j]
                if fired < len(geoms):
                    geom = geoms[fired]
                    j, x = self.contact(t, j, geom.project(x_ev), geom)
                    continue
                self.rec.append(t, j, x_ev, tag)
                termination = Termination(TerminationKind.LEFT_DOMAIN, t)
                break
            x = sliding.project(x_ev)
            if fired == 2:
                self.rec.append(t, j, x, tag)
                termination = Termination(TerminationKind.LEFT_DOMAIN, t)
                break
            self.sliding = None
            if fired == 0:
                self.rec.append(t, j, x, "interior")
                LOGGER.debug("Sliding on edge %s ends in mode %s", sliding.id, j)
            else:
                post = sliding.edge.reset(x)
                target = sliding.target_id
                self.rec.event(t, sliding.id, j, x, tag, target, post, "interior")
                j, x = target, post
        traj = self.rec.build(termination)
        _log_finish("filippov", traj)
        return traj


def simulate_filippov(
    system: HybridSystem,
    x0: Array,
    j0: int,
    T: float,
    u: InputSignal | None = None,
    tol: float = 1e-10,
    method: str = "DOP853",
    max_step: float = math.inf,
    max_contacts: int = MAX_STALLED_CONTACTS,
) -> Trajectory:
    """Unrelaxed reference execution with crossing and sliding.

    Guard contacts are classified from the two normal field components;
    escaping or degenerate contacts raise ``FilippovUndefined``.
    """

    LOGGER.info("Filippov run: tol=%g T=%g from mode %s", tol, T, j0)
    u = _resolve_input(system, u)
    run = _FilippovRun(system, u, tol, method, max_step, max_contacts)
    return run.run(x0, j0, T)


__all__ = [
    "AugmentedDynamics",
    "ConsistencyError",
    "EventBudgetError",
    "FilippovUndefined",
    "NumericalError",
    "RelaxedDynamics",
    "simulate_augmented",
    "simulate_discrete",
    "simulate_filippov",
    "simulate_relaxed_reference",
]
