"""Hybrid system definition, structural validation and edge classification."""

from __future__ import annotations

import enum
import functools
import itertools
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from scipy.optimize import linprog

from .contracts import InputTable, SystemSpec, ValidationReport, Violation
from .fields import Array, VectorField, create_field

LOGGER = logging.getLogger(__name__)

UNIT_TOL = 1e-12
ROUND_TRIP_TOL = 1e-10
VERTEX_TOL = 1e-9


class ConfigurationError(ValueError):
    """Raised when a system or input description cannot be turned into objects."""


class InconsistentEdgeError(ValueError):
    """Raised when a declared partner reset does not invert its edge."""


class EdgeKind(enum.Enum):
    REVERSIBLE = "reversible"
    NON_REVERSIBLE = "non_reversible"


@dataclass(frozen=True, eq=False)
class Mode:
    """A mode ``j`` with polytope domain ``H x <= h`` and field ``f_j``."""

    id: int
    H: Array
    h: Array
    field: VectorField

    def slack(self, x: Array) -> Array:
        return self.h - self.H @ x

    def contains(self, x: Array, tol: float = UNIT_TOL) -> bool:
        return bool(np.all(self.H @ x <= self.h + tol * (1.0 + np.max(np.abs(x)))))

    @functools.cached_property
    def vertices(self) -> Array:
        """Vertices by brute-force intersection of ``n`` facet hyperplanes."""

        return _enumerate_vertices(self.H, self.h)


@dataclass(frozen=True, eq=False)
class Edge:
    """Transition ``e`` from ``source`` to ``target`` with an affine reset."""

    id: int
    source: int
    target: int
    guard_normal: Array
    guard_offset: float
    A: Array
    b: Array
    partner: int | None = None
    target_normal: Array | None = None
    target_offset: float | None = None

    def guard_value(self, x: Array) -> float:
        return float(self.guard_normal @ x - self.guard_offset)

    def reset(self, x: Array) -> Array:
        out: Array = self.A @ x + self.b
        return out


@dataclass(frozen=True, eq=False)
class HybridSystem:
    """Immutable hybrid system; every query is a pure read."""

    state_dim: int
    input_dim: int
    modes: tuple[Mode, ...]
    edges: tuple[Edge, ...]
    input_box: Array = field(default_factory=lambda: np.zeros((0, 2)))

    @functools.cached_property
    def _mode_index(self) -> dict[int, Mode]:
        return {m.id: m for m in self.modes}

    @functools.cached_property
    def _edge_index(self) -> dict[int, Edge]:
        return {e.id: e for e in self.edges}

    @functools.cached_property
    def _outgoing(self) -> dict[int, tuple[Edge, ...]]:
        out: dict[int, list[Edge]] = {m.id: [] for m in self.modes}
        for edge in sorted(self.edges, key=lambda e: e.id):
            out.setdefault(edge.source, []).append(edge)
        return {k: tuple(v) for k, v in out.items()}

    def mode(self, j: int) -> Mode:
        try:
            return self._mode_index[j]
        except KeyError:
            raise KeyError(f"unknown mode {j}") from None

    def edge(self, e: int) -> Edge:
        try:
            return self._edge_index[e]
        except KeyError:
            raise KeyError(f"unknown edge {e}") from None

    def outgoing(self, j: int) -> tuple[Edge, ...]:
        """Edges leaving mode ``j`` ordered by id."""

        return self._outgoing.get(j, ())

    def has_mode(self, j: int) -> bool:
        return j in self._mode_index

    def has_edge(self, e: int) -> bool:
        return e in self._edge_index


@dataclass(frozen=True, eq=False)
class InputSignal:
    """Piecewise-constant input, right-continuous at its breakpoints."""

    breakpoints: Array
    values: Array

    @classmethod
    def zero(cls, input_dim: int) -> InputSignal:
        return cls(np.zeros(1), np.zeros((1, input_dim)))

    @classmethod
    def from_table(cls, table: InputTable, system: HybridSystem) -> InputSignal:
        """Build from a validated table, checking values against the input box."""

        values = np.array(table.values, dtype=float).reshape(len(table.values), -1)
        if values.shape[1] != system.input_dim:
            raise ConfigurationError(
                f"input values have width {values.shape[1]}, "
                f"system input_dim is {system.input_dim}"
            )
        if system.input_dim:
            lo, hi = system.input_box[:, 0], system.input_box[:, 1]
            bad = np.any((values < lo) | (values > hi), axis=1)
            if np.any(bad):
                row = int(np.argmax(bad))
                raise ConfigurationError(
                    f"input value {table.values[row]} at t={table.breakpoints[row]} "
                    "lies outside the input box"
                )
        return cls(np.array(table.breakpoints, dtype=float), values)

    def __call__(self, t: float) -> Array:
        idx = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        value: Array = self.values[max(idx, 0)]
        return value

    def breakpoints_between(self, t0: float, t1: float) -> list[float]:
        """Breakpoints strictly inside ``(t0, t1)``."""

        return [float(b) for b in self.breakpoints if t0 < b < t1]


def _enumerate_vertices(H: Array, h: Array) -> Array:
    n = H.shape[1]
    found: list[Array] = []
    for rows in itertools.combinations(range(H.shape[0]), n):
        sub = H[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.linalg.solve(sub, h[list(rows)])
        if np.all(H @ v <= h + VERTEX_TOL * (1.0 + np.max(np.abs(v)))):
            if not any(np.allclose(v, w, atol=VERTEX_TOL) for w in found):
                found.append(v)
    if not found:
        return np.zeros((0, n))
    return np.array(found)


def _facet_vertices(mode: Mode, edge: Edge) -> Array:
    verts = mode.vertices
    if not len(verts):
        return verts
    on_plane = np.abs(verts @ edge.guard_normal - edge.guard_offset) <= VERTEX_TOL
    return verts[on_plane]


def guard_samples(
    system: HybridSystem,
    edge: Edge,
    rng: np.random.Generator | None = None,
    count: int = 8,
) -> Array:
    """Facet vertices of the guard, their centroid and random convex mixes."""

    verts = _facet_vertices(system.mode(edge.source), edge)
    if not len(verts):
        return verts
    rng = rng if rng is not None else np.random.default_rng(0)
    weights = rng.dirichlet(np.ones(len(verts)), size=count)
    return np.vstack([verts, verts.mean(axis=0), weights @ verts])


def _round_trip_error(system: HybridSystem, edge: Edge, samples: Array) -> float:
    partner = system.edge(edge.partner) if edge.partner is not None else None
    if partner is None or not len(samples):
        return float("inf")
    back = np.array([partner.reset(edge.reset(x)) for x in samples])
    return float(np.max(np.abs(back - samples)))


def classify_edge(
    system: HybridSystem,
    e: int,
    *,
    strict: bool = True,
    rng: np.random.Generator | None = None,
) -> EdgeKind:
    """Return whether edge ``e`` is reversible.

    An edge is reversible when it declares a partner whose reset maps the
    image of every sampled guard point back onto it. A declared partner that
    fails the round trip raises ``InconsistentEdgeError`` unless ``strict`` is
    false, in which case the edge is reported as non-reversible.
    """

    edge = system.edge(e)
    if edge.partner is None:
        return EdgeKind.NON_REVERSIBLE
    if not system.has_edge(edge.partner):
        raise InconsistentEdgeError(f"edge {e} names unknown partner {edge.partner}")
    error = _round_trip_error(system, edge, guard_samples(system, edge, rng))
    if error <= ROUND_TRIP_TOL:
        return EdgeKind.REVERSIBLE
    if strict:
        raise InconsistentEdgeError(
            f"edge {e}: partner {edge.partner} round trip error {error:.3e}"
        )
    LOGGER.debug("Edge %s partner round trip fails (%.3e)", e, error)
    return EdgeKind.NON_REVERSIBLE


def eval_field(system: HybridSystem, j: int, x: Array, u: Array) -> Array:
    """Return ``f_j(x, u)``; ``x`` may lie outside ``D_j``."""

    return system.mode(j).field(x, u)


def _domain_violations(mode: Mode) -> Iterable[Violation]:
    norms = np.linalg.norm(mode.H, axis=1)
    for i, norm in enumerate(norms):
        if abs(norm - 1.0) > UNIT_TOL:
            yield Violation(
                code="normal_not_unit",
                message=f"half-space {i} normal has norm {norm:.15g}",
                mode=mode.id,
            )
    n = mode.H.shape[1]
    for i in range(n):
        for sign in (1.0, -1.0):
            cost = np.zeros(n)
            cost[i] = -sign
            res = linprog(cost, A_ub=mode.H, b_ub=mode.h, bounds=[(None, None)] * n)
            if res.status == 2:
                yield Violation(
                    code="empty_domain", message="polytope is empty", mode=mode.id
                )
                return
            if res.status == 3:
                yield Violation(
                    code="unbounded_domain",
                    message=f"polytope unbounded along coordinate {i}",
                    mode=mode.id,
                )
                return


def _on_facet(mode: Mode, normal: Array, offset: float) -> bool:
    for row, off in zip(mode.H, mode.h):
        if np.allclose(row, normal, atol=1e-10) and abs(off - offset) <= 1e-10:
            return True
    return False


def _edge_violations(
    system: HybridSystem, edge: Edge, rng: np.random.Generator
) -> Iterable[Violation]:
    def flag(code: str, message: str) -> Violation:
        return Violation(code=code, message=message, edge=edge.id)

    if not system.has_mode(edge.source) or not system.has_mode(edge.target):
        yield flag("unknown_mode", f"edge {edge.id} references an unknown mode")
        return
    source = system.mode(edge.source)
    target = system.mode(edge.target)
    norm = float(np.linalg.norm(edge.guard_normal))
    if abs(norm - 1.0) > UNIT_TOL:
        yield flag("normal_not_unit", f"guard normal has norm {norm:.15g}")
    verts = source.vertices
    if len(verts):
        worst = float(np.max(verts @ edge.guard_normal - edge.guard_offset))
        if worst > UNIT_TOL:
            yield flag(
                "guard_not_outward",
                f"guard value {worst:.6g} > 0 at a vertex of mode {source.id}",
            )
    if not _on_facet(source, edge.guard_normal, edge.guard_offset):
        yield flag("guard_not_on_facet", "guard plane is not a facet of the source")

    if edge.partner is not None:
        if not system.has_edge(edge.partner):
            yield flag("unknown_partner", f"partner {edge.partner} does not exist")
            return
        partner = system.edge(edge.partner)
        if partner.source != edge.target or partner.target != edge.source:
            yield flag("partner_mismatch", "partner does not run in reverse")
        svals = np.linalg.svd(edge.A, compute_uv=False)
        if svals[-1] <= 1e-9 * svals[0]:
            yield flag("reset_singular", "reversible edge has a singular reset")
        error = _round_trip_error(system, edge, guard_samples(system, edge, rng))
        if error > ROUND_TRIP_TOL:
            yield flag("round_trip_failed", f"partner round trip error {error:.3e}")
        return

    if edge.target_normal is None or edge.target_offset is None:
        yield flag("missing_target_facet", "non-reversible edge needs a target facet")
        return
    tnorm = float(np.linalg.norm(edge.target_normal))
    if abs(tnorm - 1.0) > UNIT_TOL:
        yield flag("normal_not_unit", f"target facet normal norm {tnorm:.15g}")
    tverts = target.vertices
    if len(tverts):
        worst = float(np.max(tverts @ edge.target_normal - edge.target_offset))
        if worst > UNIT_TOL:
            yield flag(
                "target_facet_not_outward",
                f"target facet value {worst:.6g} > 0 at a vertex of mode {target.id}",
            )
    samples = guard_samples(system, edge, rng)
    if len(samples):
        images = samples @ edge.A.T + edge.b
        off = float(np.max(np.abs(images @ edge.target_normal - edge.target_offset)))
        if off > ROUND_TRIP_TOL:
            yield flag(
                "reset_leaves_target_facet",
                f"reset image misses the target facet by {off:.3e}",
            )


def validate_system(
    system: HybridSystem, rng: np.random.Generator | None = None
) -> ValidationReport:
    """Check every structural invariant and return the violations found."""

    rng = rng if rng is not None else np.random.default_rng(0)
    violations: list[Violation] = []
    if not system.modes:
        violations.append(Violation(code="no_modes", message="system has no modes"))
    for mode in system.modes:
        violations.extend(_domain_violations(mode))
    for edge in system.edges:
        violations.extend(_edge_violations(system, edge, rng))
    by_source: dict[int, list[Edge]] = {}
    for edge in system.edges:
        by_source.setdefault(edge.source, []).append(edge)
    for edges in by_source.values():
        for first, second in itertools.combinations(edges, 2):
            same_plane = (
                np.allclose(first.guard_normal, second.guard_normal, atol=1e-10)
                and abs(first.guard_offset - second.guard_offset) <= 1e-10
            )
            if same_plane:
                violations.append(
                    Violation(
                        code="guards_overlap",
                        message=f"edges {first.id} and {second.id} share a guard",
                        edge=second.id,
                    )
                )
    return ValidationReport(violations=violations)


def _array(values: Sequence[Any], shape: tuple[int, ...] | None = None) -> Array:
    arr = np.array(values, dtype=float)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


def build_system(spec: SystemSpec) -> HybridSystem:
    """Instantiate fields and arrays for a validated ``SystemSpec``."""

    n, m = spec.state_dim, spec.input_dim
    modes = []
    for mode_spec in spec.modes:
        try:
            vf = create_field(mode_spec.field.kind, mode_spec.field.params, n, m)
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"mode {mode_spec.id}: {exc}") from exc
        H = _array([hs.normal for hs in mode_spec.halfspaces], (-1, n))
        h = _array([hs.offset for hs in mode_spec.halfspaces])
        modes.append(Mode(mode_spec.id, H, h, vf))
    edges = []
    for es in spec.edges:
        facet = es.target_facet
        edges.append(
            Edge(
                id=es.id,
                source=es.source,
                target=es.target,
                guard_normal=_array(es.guard.normal),
                guard_offset=es.guard.offset,
                A=_array(es.reset.A, (n, n)),
                b=_array(es.reset.b),
                partner=es.partner,
                target_normal=_array(facet.normal) if facet else None,
                target_offset=facet.offset if facet else None,
            )
        )
    if len({m.id for m in modes}) != len(modes):
        raise ConfigurationError("mode ids must be unique")
    if len({e.id for e in edges}) != len(edges):
        raise ConfigurationError("edge ids must be unique")
    box = _array(spec.input_box, (m, 2)) if m else np.zeros((0, 2))
    return HybridSystem(n, m, tuple(modes), tuple(edges), box)


def _read_tree(path: Path) -> Mapping[str, Any]:
    data = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} does not contain a mapping")
    return data


def load_system(path: Path) -> HybridSystem:
    """Load a JSON or YAML system file."""

    spec = SystemSpec.model_validate(_read_tree(path))
    LOGGER.debug("Loaded system %s with %d modes", path, len(spec.modes))
    return build_system(spec)


def load_input_signal(path: Path, system: HybridSystem) -> InputSignal:
    """Load a JSON or YAML input table for ``system``."""

    table = InputTable.model_validate(_read_tree(path))
    return InputSignal.from_table(table, system)


__all__ = [
    "ConfigurationError",
    "Edge",
    "EdgeKind",
    "HybridSystem",
    "InconsistentEdgeError",
    "InputSignal",
    "Mode",
    "build_system",
    "classify_edge",
    "eval_field",
    "guard_samples",
    "load_input_signal",
    "load_system",
    "validate_system",
]
