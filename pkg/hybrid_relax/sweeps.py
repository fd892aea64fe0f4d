"""Convergence and sensitivity sweeps over simulation grids."""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, TypeVar

import numpy as np

from .analysis import (
    rest_error,
    trajectory_distance,
    variational_flow,
)
from .contracts import FitSummary, SweepResult, SweepRow
from .execution import (
    simulate_augmented,
    simulate_discrete,
    simulate_filippov,
    simulate_relaxed_reference,
)
from .fields import Array
from .integrators import IntegratorKind, IntegratorScheme
from .model import HybridSystem, InputSignal
from .relaxation import RelaxationParams, RelaxedSystem, TransitionFunction
from .trajectory import Trajectory

LOGGER = logging.getLogger(__name__)

SWEEP_HEADER = ["h", "eps", "delta", "error", "slope_running", "wall_time_s"]
MIN_FIT_POINTS = 3

Axis = Literal["h", "eps", "delta"]
Oracle = Callable[[float], Array]
ItemT = TypeVar("ItemT")
ResultT = TypeVar("ResultT")


class SweepError(ValueError):
    """Raised when a sweep cannot produce a slope fit."""


class ErrorKind(enum.Enum):
    ANALYTIC = "analytic"
    FILIPPOV = "filippov"
    SELF = "self"
    REST = "rest"


@dataclass(frozen=True)
class GridPoint:
    """``h=None`` runs the adaptive reference at the sweep tolerance."""

    h: float | None
    eps: float


def _fan_out(
    fn: Callable[[ItemT], ResultT], items: Sequence[ItemT], workers: int
) -> list[ResultT]:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def simulate_point(
    relaxed: RelaxedSystem,
    x0: Array,
    j0: int,
    T_end: float,
    *,
    h: float | None,
    scheme_kind: IntegratorKind = IntegratorKind.EULER,
    u: InputSignal | None = None,
    tol: float = 1e-10,
) -> Trajectory:
    """Run the simulator that fits the system and grid point."""

    scheme = IntegratorScheme(scheme_kind, h) if h is not None else None
    if relaxed.z_dim:
        if scheme is None:
            return simulate_augmented(relaxed, x0, j0, T_end, u, tol=tol)
        return simulate_augmented(relaxed, x0, j0, T_end, u, scheme=scheme)
    if scheme is None:
        return simulate_relaxed_reference(relaxed, x0, j0, T_end, u, tol=tol)
    return simulate_discrete(relaxed, scheme, x0, j0, T_end, u)


def _analytic_error(traj: Trajectory, oracle: Oracle) -> float:
    return max(
        float(np.max(np.abs(x - oracle(float(t))))) for t, x in zip(traj.t, traj.x)
    )


def running_slopes(
    values: Sequence[float], errors: Sequence[float]
) -> list[float | None]:
    """Log-log slope of each row against the previous one."""

    out: list[float | None] = [None]
    for (a0, e0), (a1, e1) in zip(zip(values, errors), zip(values[1:], errors[1:])):
        if min(a0, a1, e0, e1) <= 0.0 or a0 == a1:
            out.append(None)
        else:
            out.append(math.log(e1 / e0) / math.log(a1 / a0))
    return out


def fit_slope(
    axis: Axis, values: Sequence[float], errors: Sequence[float]
) -> FitSummary:
    """Least-squares line through ``(log value, log error)``."""

    pairs = [(a, e) for a, e in zip(values, errors) if a > 0.0 and e > 0.0]
    if len(pairs) < MIN_FIT_POINTS:
        raise SweepError(
            f"need at least {MIN_FIT_POINTS} points with positive error, "
            f"got {len(pairs)}"
        )
    lx = np.log([a for a, _ in pairs])
    ly = np.log([e for _, e in pairs])
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = ly - (slope * lx + intercept)
    spread = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residual**2)) / spread if spread > 0 else 1.0
    return FitSummary(axis=axis, slope=float(slope), intercept=float(intercept), r2=r2)


def _default_axis(points: Sequence[GridPoint]) -> Axis:
    steps = {p.h for p in points}
    return "h" if len(steps) > 1 and None not in steps else "eps"


def convergence_sweep(
    system: HybridSystem,
    grid: Sequence[GridPoint],
    kind: ErrorKind,
    x0: Array,
    j0: int,
    T_end: float,
    *,
    scheme_kind: IntegratorKind = IntegratorKind.EULER,
    u: InputSignal | None = None,
    transition: TransitionFunction | None = None,
    oracle: Oracle | None = None,
    rest_from: float | None = None,
    reference_tol: float = 1e-10,
    workers: int = 1,
    axis: Axis | None = None,
) -> SweepResult:
    """Simulate every grid point and measure its error of the given kind.

    ``SELF`` measures against the finest point of the grid, which is then left
    out of the fit.
    """

    if not grid:
        raise SweepError("empty sweep grid")
    if kind is ErrorKind.ANALYTIC and oracle is None:
        raise SweepError("analytic error needs an oracle")
    if kind is ErrorKind.REST and rest_from is None:
        raise SweepError("rest error needs rest_from")
    axis = axis or _default_axis(grid)
    tf = transition or TransitionFunction()
    x0 = np.asarray(x0, dtype=float)
    LOGGER.info(
        "Convergence sweep: %d points, error=%s, axis=%s", len(grid), kind.value, axis
    )

    def relax(point: GridPoint) -> RelaxedSystem:
        return RelaxedSystem(system, RelaxationParams(point.eps, tf))

    def run(point: GridPoint) -> tuple[RelaxedSystem, Trajectory, float]:
        relaxed = relax(point)
        started = time.perf_counter()
        traj = simulate_point(
            relaxed,
            x0,
            j0,
            T_end,
            h=point.h,
            scheme_kind=scheme_kind,
            u=u,
            tol=reference_tol,
        )
        LOGGER.info("Sweep point h=%s eps=%g done", point.h, point.eps)
        return relaxed, traj, time.perf_counter() - started

    results = _fan_out(run, list(grid), workers)
    reference: Trajectory | None = None
    finest = -1
    if kind is ErrorKind.FILIPPOV:
        reference = simulate_filippov(system, x0, j0, T_end, u, tol=reference_tol)
    elif kind is ErrorKind.SELF:
        finest = min(range(len(grid)), key=lambda i: (grid[i].h or 0.0, grid[i].eps))
        reference = results[finest][1]

    def measure(index: int) -> float:
        relaxed, traj, _ = results[index]
        if kind is ErrorKind.ANALYTIC:
            assert oracle is not None
            return _analytic_error(traj, oracle)
        if kind is ErrorKind.REST:
            assert rest_from is not None
            return rest_error(traj, rest_from)
        assert reference is not None
        if index == finest:
            return 0.0
        metric = results[finest][0] if kind is ErrorKind.SELF else relaxed
        return trajectory_distance(metric, traj, reference, norm="max")

    errors = _fan_out(measure, list(range(len(grid))), workers)
    values = [(p.h or 0.0) if axis == "h" else p.eps for p in grid]
    slopes = running_slopes(values, errors)
    rows = [
        SweepRow(
            h=point.h,
            eps=point.eps,
            error=error,
            slope_running=slope,
            wall_time=wall,
        )
        for point, (_, _, wall), error, slope in zip(grid, results, errors, slopes)
    ]
    usable = [i for i in range(len(grid)) if i != finest]
    fit = fit_slope(axis, [values[i] for i in usable], [errors[i] for i in usable])
    LOGGER.info("Sweep fit: slope=%.4g r2=%.4g", fit.slope, fit.r2)
    return SweepResult(kind=kind.value, rows=rows, fit=fit)


def sensitivity_sweep(
    relaxed: RelaxedSystem,
    scheme: IntegratorScheme,
    x0: Array,
    j0: int,
    T_end: float,
    direction: Array,
    deltas: Sequence[float],
    *,
    u: InputSignal | None = None,
    workers: int = 1,
) -> SweepResult:
    """Compare perturbed runs with their first-order prediction.

    The error of each row is the trajectory distance between the run from
    ``x0 + delta * direction`` and the nominal plus the variational flow.
    """

    x0 = np.asarray(x0, dtype=float)
    direction = np.asarray(direction, dtype=float)
    LOGGER.info("Sensitivity sweep: %d deltas, h=%g", len(deltas), scheme.h)

    def run(x_start: Array) -> Trajectory:
        return simulate_point(
            relaxed, x_start, j0, T_end, h=scheme.h, scheme_kind=scheme.kind, u=u
        )

    nominal = run(x0)

    def measure(delta: float) -> tuple[float, float]:
        started = time.perf_counter()
        perturbed = run(x0 + delta * direction)
        flow = variational_flow(relaxed, scheme, nominal, delta * direction, u)
        error = trajectory_distance(relaxed, perturbed, flow.approximation)
        LOGGER.info("Sensitivity delta=%g: error=%.4g", delta, error)
        return error, time.perf_counter() - started

    measured = _fan_out(measure, list(deltas), workers)
    errors = [error for error, _ in measured]
    slopes = running_slopes(list(deltas), errors)
    rows = [
        SweepRow(
            h=scheme.h,
            eps=relaxed.eps,
            delta=delta,
            error=error,
            slope_running=slope,
            wall_time=wall,
        )
        for delta, (error, wall), slope in zip(deltas, measured, slopes)
    ]
    fit = fit_slope("delta", list(deltas), errors)
    return SweepResult(kind="sensitivity", rows=rows, fit=fit)


def _cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_sweep_csv(result: SweepResult, path: Path) -> Path:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for row in result.rows:
            writer.writerow(
                [
                    _cell(row.h),
                    _cell(row.eps),
                    _cell(row.delta),
                    _cell(row.error),
                    _cell(row.slope_running),
                    _cell(row.wall_time),
                ]
            )
    return path


def write_fit_json(result: SweepResult, path: Path) -> Path:
    record = result.fit.model_dump() if result.fit is not None else {}
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path


__all__ = [
    "ErrorKind",
    "GridPoint",
    "SWEEP_HEADER",
    "SweepError",
    "convergence_sweep",
    "fit_slope",
    "running_slopes",
    "sensitivity_sweep",
    "simulate_point",
    "write_fit_json",
    "write_sweep_csv",
]
