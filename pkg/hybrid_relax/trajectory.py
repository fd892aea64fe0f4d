"""Hybrid arcs: samples, discrete events, termination and CSV export."""

from __future__ import annotations

import csv
import enum
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import numpy.typing as npt

from .fields import Array


class TerminationKind(enum.Enum):
    HORIZON_REACHED = "horizon_reached"
    LEFT_DOMAIN = "left_domain"
    Z_BOUND_EXCEEDED = "z_bound_exceeded"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    t: float


@dataclass(frozen=True, eq=False)
class Event:
    """A discrete transition; ``index`` is the sample holding the post-state."""

    t: float
    edge: int
    pre_mode: int
    post_mode: int
    pre: Array
    post: Array
    index: int
    pre_region: str = "interior"
    pre_z: Array | None = None


@dataclass(eq=False)
class Trajectory:
    """Time-stamped hybrid arc.

    Sample times are strictly increasing. At an event the post-state is a
    sample at the event time while the pre-state lives on the ``Event``.
    """

    t: Array
    modes: npt.NDArray[np.int64]
    x: Array
    regions: list[str]
    z: Array
    events: list[Event] = field(default_factory=list)
    termination: Termination | None = None

    def __len__(self) -> int:
        return int(self.t.shape[0])

    @property
    def state_dim(self) -> int:
        return int(self.x.shape[1])

    @property
    def z_dim(self) -> int:
        return int(self.z.shape[1])

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    @property
    def final_mode(self) -> int:
        return int(self.modes[-1])

    @property
    def final_state(self) -> Array:
        out: Array = self.x[-1]
        return out

    def segment_starts(self) -> list[int]:
        return [0] + [ev.index for ev in self.events]

    def segments(self) -> list[tuple[int, int]]:
        """Half-open sample ranges between consecutive events."""

        starts = self.segment_starts()
        ends = starts[1:] + [len(self)]
        return list(zip(starts, ends))

    def _events_by_index(self) -> dict[int, Event]:
        return {ev.index: ev for ev in self.events}

    def _pre_z(self, ev: Event) -> Array:
        if ev.pre_z is not None:
            return ev.pre_z
        out: Array = self.z[ev.index - 1]
        return out

    def state_at(self, t: float) -> tuple[int, Array, Array]:
        """Right-continuous state at ``t`` with linear interpolation in time."""

        idx = int(np.searchsorted(self.t, t, side="right")) - 1
        idx = min(max(idx, 0), len(self) - 1)
        if idx == len(self) - 1 or t <= self.t[idx]:
            return int(self.modes[idx]), self.x[idx], self.z[idx]
        t0, t1 = self.t[idx], self.t[idx + 1]
        s = (t - t0) / (t1 - t0)
        event = self._events_by_index().get(idx + 1)
        if event is None:
            x1, z1 = self.x[idx + 1], self.z[idx + 1]
        else:
            x1, z1 = event.pre, self._pre_z(event)
        x = (1.0 - s) * self.x[idx] + s * x1
        z = (1.0 - s) * self.z[idx] + s * z1
        return int(self.modes[idx]), x, z

    def left_state(self, t: float) -> tuple[int, Array, Array]:
        """Left limit at ``t``; differs from ``state_at`` only at event times."""

        for ev in self.events:
            if ev.t == t:
                return ev.pre_mode, ev.pre, self._pre_z(ev)
        return self.state_at(t)

    def strip_intervals(self, edge: int | None = None) -> list[tuple[float, float]]:
        """Maximal runs of consecutive in-strip samples as ``(start, end)`` times."""

        def inside(tag: str) -> bool:
            if edge is None:
                return tag.startswith("strip:")
            return tag == f"strip:{edge}"

        breaks = set(self.segment_starts()[1:])
        runs: list[tuple[float, float]] = []
        begin: int | None = None
        for i, tag in enumerate(self.regions):
            if begin is not None and (i in breaks or not inside(tag)):
                runs.append((float(self.t[begin]), float(self.t[i - 1])))
                begin = None
            if begin is None and inside(tag):
                begin = i
        if begin is not None:
            runs.append((float(self.t[begin]), float(self.t[-1])))
        return runs

    def header(self) -> list[str]:
        return (
            ["t", "mode", "region"]
            + [f"x{i}" for i in range(self.state_dim)]
            + [f"z{i}" for i in range(self.z_dim)]
            + ["event_edge"]
        )

    def rows(self) -> Iterator[list[str]]:
        """CSV rows; an event contributes its pre row before the post row."""

        events = self._events_by_index()
        for i in range(len(self)):
            ev = events.get(i)
            marker = ""
            if ev is not None:
                marker = str(ev.edge)
                yield _row(
                    ev.t, ev.pre_mode, ev.pre_region, ev.pre, self._pre_z(ev), marker
                )
            yield _row(
                float(self.t[i]),
                int(self.modes[i]),
                self.regions[i],
                self.x[i],
                self.z[i],
                marker,
            )

    def write_csv(self, path: Path) -> Path:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            writer.writerows(self.rows())
        return path


def _row(t: float, mode: int, region: str, x: Array, z: Array, edge: str) -> list[str]:
    values = [repr(float(v)) for v in x] + [repr(float(v)) for v in z]
    return [repr(float(t)), str(mode), region, *values, edge]


class TrajectoryRecorder:
    """Append-only builder backed by preallocated arrays."""

    def __init__(self, state_dim: int, z_dim: int = 0, capacity: int = 1024) -> None:
        self._t = np.empty(capacity)
        self._modes = np.empty(capacity, dtype=np.int64)
        self._x = np.empty((capacity, state_dim))
        self._z = np.empty((capacity, z_dim))
        self._regions: list[str] = []
        self._events: list[Event] = []
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def _grow(self) -> None:
        cap = 2 * self._t.shape[0]
        self._t = np.resize(self._t, cap)
        self._modes = np.resize(self._modes, cap)
        self._x = np.resize(self._x, (cap, self._x.shape[1]))
        self._z = np.resize(self._z, (cap, self._z.shape[1]))

    def append(
        self, t: float, mode: int, x: Array, region: str, z: Array | None = None
    ) -> int:
        if self._size == self._t.shape[0]:
            self._grow()
        i = self._size
        self._t[i] = t
        self._modes[i] = mode
        self._x[i] = x
        if self._z.shape[1]:
            self._z[i] = z if z is not None else 0.0
        self._regions.append(region)
        self._size += 1
        return i

    def event(
        self,
        t: float,
        edge: int,
        pre_mode: int,
        pre: Array,
        pre_region: str,
        post_mode: int,
        post: Array,
        post_region: str,
        pre_z: Array | None = None,
        post_z: Array | None = None,
    ) -> Event:
        """Record the post-state sample and the event that produced it."""

        index = self.append(t, post_mode, post, post_region, post_z)
        ev = Event(
            t=t,
            edge=edge,
            pre_mode=pre_mode,
            post_mode=post_mode,
            pre=np.array(pre, dtype=float),
            post=np.array(post, dtype=float),
            index=index,
            pre_region=pre_region,
            pre_z=None if pre_z is None else np.array(pre_z, dtype=float),
        )
        self._events.append(ev)
        return ev

    @property
    def event_count(self) -> int:
        return len(self._events)

    @property
    def last_t(self) -> float:
        return float(self._t[self._size - 1])

    def build(self, termination: Termination) -> Trajectory:
        n = self._size
        return Trajectory(
            t=self._t[:n].copy(),
            modes=self._modes[:n].copy(),
            x=self._x[:n].copy(),
            regions=list(self._regions),
            z=self._z[:n].copy(),
            events=list(self._events),
            termination=termination,
        )


__all__ = [
    "Event",
    "Termination",
    "TerminationKind",
    "Trajectory",
    "TrajectoryRecorder",
]
