"""Command-line front end writing trajectory, sweep and manifest artifacts."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections.abc import Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError, model_validator

from .analysis import rest_error
from .contracts import RunManifest, SweepResult, ValidationReport
from .execution import simulate_augmented, simulate_filippov
from .fields import Array
from .integrators import IntegratorKind, IntegratorScheme
from .model import (
    ConfigurationError,
    HybridSystem,
    InputSignal,
    load_input_signal,
    load_system,
    validate_system,
)
from .registry import bouncing_ball_zeno_time, example_names, registry_system
from .relaxation import (
    RelaxationParams,
    RelaxedSystem,
    TransitionFunction,
    TransitionKind,
)
from .sweeps import (
    ErrorKind,
    GridPoint,
    convergence_sweep,
    sensitivity_sweep,
    simulate_point,
    write_fit_json,
    write_sweep_csv,
)
from .trajectory import Trajectory

UTC = timezone.utc  # datetime.UTC alias (Python 3.11+)

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_FOUND = 2
EXIT_INVALID = 3
EXIT_SIMULATION = 4

Command = Literal[
    "validate", "simulate", "filippov", "augmented", "sweep", "sensitivity", "example"
]

EXAMPLE_DEFAULTS: dict[str, dict[str, Any]] = {
    "bouncing-ball": {"x0": [1.0, 0.0], "T": 6.0, "h": [1e-4], "eps": [1e-6]},
    "double-pendulum": {
        "x0": [25.0, 0.0, 35.0, 0.0],
        "T": 10.0,
        "h": [1e-5],
        "eps": [1e-5],
    },
}
ANGULAR_EXAMPLES = {"double-pendulum"}


class InvalidSystemError(ConfigurationError):
    """Raised when a system file fails ``validate_system``."""

    def __init__(self, report: ValidationReport) -> None:
        codes = ", ".join(v.code for v in report.violations)
        super().__init__(f"system has {len(report.violations)} violations: {codes}")
        self.report = report


class RunConfig(BaseModel):
    """Every option of one CLI invocation; echoed into ``manifest.json``."""

    command: Command
    system: str | None = Field(None, description="System file (JSON or YAML)")
    example: str | None = Field(None, description="Registry example name")
    params: dict[str, float] = Field(default_factory=dict)
    c: float | None = Field(None, ge=0.0, le=1.0)
    x0: list[float] | None = Field(
        None, description="Initial state; degrees for angular examples"
    )
    mode: int = Field(0, ge=0)
    scheme: Literal["euler", "rk4"] = "euler"
    h: list[float] = Field(default_factory=list)
    eps: list[float] = Field(default_factory=list)
    eps_ratio: float | None = Field(None, gt=0.0)
    T: float | None = Field(None, gt=0.0)
    tol: float | None = Field(None, gt=0.0)
    transition: Literal["sine", "smoothstep"] = "sine"
    inputs: str | None = None
    out: str = "out"
    seed: int = 0
    error: Literal["filippov", "self", "rest"] = "self"
    rest_from: float | None = None
    deltas: list[float] = Field(default_factory=list)
    direction: list[float] | None = None

    @model_validator(mode="after")
    def _source(self) -> RunConfig:
        if (self.system is None) == (self.example is None):
            raise ValueError("give exactly one of a system file or an example name")
        if self.example is not None and self.example not in EXAMPLE_DEFAULTS:
            raise ValueError(
                f"unknown example {self.example!r}; "
                f"choose from {', '.join(example_names())}"
            )
        if any(v <= 0 for v in [*self.h, *self.eps, *self.deltas]):
            raise ValueError("h, eps and deltas must be positive")
        return self

    def _default(self, key: str) -> Any:
        if self.example is None:
            return None
        return EXAMPLE_DEFAULTS[self.example][key]

    @property
    def angular(self) -> bool:
        return self.example in ANGULAR_EXAMPLES

    def steps(self) -> list[float]:
        return self.h or list(self._default("h") or [])

    def widths(self) -> list[float]:
        if self.eps_ratio is not None:
            return [self.eps_ratio * h for h in self.steps()]
        return self.eps or list(self._default("eps") or [])

    def horizon(self) -> float:
        T = self.T if self.T is not None else self._default("T")
        if T is None:
            raise ConfigurationError("--T is required for system files")
        return float(T)

    def _state(self, values: Sequence[float]) -> Array:
        state = np.asarray(values, dtype=float)
        return np.radians(state) if self.angular else state

    def initial_state(self) -> Array:
        x0 = self.x0 if self.x0 is not None else self._default("x0")
        if x0 is None:
            raise ConfigurationError("--x0 is required for system files")
        return self._state(x0)

    def perturbation(self) -> Array:
        if self.direction is None:
            raise ConfigurationError("--direction is required for sensitivity")
        return self._state(self.direction)

    def relaxation(self, eps: float) -> RelaxationParams:
        transition = TransitionFunction(TransitionKind(self.transition))
        return RelaxationParams(eps, transition)

    def single(self, values: list[float], name: str) -> float:
        if len(values) != 1:
            raise ConfigurationError(f"{self.command} takes a single --{name} value")
        return values[0]


class ArtifactWriter:
    """Write run artifacts into one output directory."""

    def __init__(self, directory: Path) -> None:
        self.directory = directory
        self.directory.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[str] = []

    def _path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.directory / name

    def trajectory(self, traj: Trajectory) -> Path:
        return traj.write_csv(self._path("trajectory.csv"))

    def sweep(self, result: SweepResult) -> None:
        write_sweep_csv(result, self._path("sweep.csv"))
        write_fit_json(result, self._path("fit.json"))

    def report(self, report: ValidationReport) -> Path:
        path = self._path("report.json")
        path.write_text(report.model_dump_json(indent=2) + "\n")
        return path

    def manifest(self, manifest: RunManifest) -> Path:
        path = self.directory / "manifest.json"
        record = manifest.model_dump(mode="json")
        path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
        return path


def _version() -> str:
    from . import __version__

    return __version__


def load_config_system(config: RunConfig) -> HybridSystem:
    if config.example is not None:
        params: dict[str, Any] = dict(config.params)
        if config.c is not None:
            params["c"] = config.c
        return registry_system(config.example, params)
    assert config.system is not None
    path = Path(config.system)
    if not path.exists():
        raise FileNotFoundError(f"system file {path} not found")
    return load_system(path)


def _inputs(config: RunConfig, system: HybridSystem) -> InputSignal | None:
    if config.inputs is None:
        return None
    path = Path(config.inputs)
    if not path.exists():
        raise FileNotFoundError(f"input file {path} not found")
    return load_input_signal(path, system)


def _grid(config: RunConfig) -> list[GridPoint]:
    steps, widths = config.steps(), config.widths()
    if not widths:
        raise ConfigurationError("--eps or --eps-ratio is required")
    if not steps:
        return [GridPoint(None, eps) for eps in widths]
    if len(steps) == 1:
        steps = steps * len(widths)
    if len(widths) == 1:
        widths = widths * len(steps)
    if len(steps) != len(widths):
        raise ConfigurationError("--h and --eps lists must have matching lengths")
    return [GridPoint(h, eps) for h, eps in zip(steps, widths)]


def _zeno_time(config: RunConfig) -> float:
    x0 = config.initial_state()
    c = config.c if config.c is not None else 0.5
    g = float(config.params.get("g", 1.0))
    return bouncing_ball_zeno_time((float(x0[0]), float(x0[1])), c, g)


def _trajectory_metrics(config: RunConfig, traj: Trajectory) -> dict[str, float]:
    metrics = {"samples": float(len(traj)), "events": float(len(traj.events))}
    if config.example == "bouncing-ball":
        t_zeno = _zeno_time(config)
        metrics["zeno_time"] = t_zeno
        if t_zeno < traj.horizon:
            metrics["rest_error"] = rest_error(traj, t_zeno)
    runs = traj.strip_intervals()
    if runs:
        metrics["strip_intervals"] = float(len(runs))
        metrics["strip_time"] = sum(b - a for a, b in runs)
    return metrics


def _simulate(
    config: RunConfig, system: HybridSystem, writer: ArtifactWriter
) -> tuple[Trajectory, dict[str, float]]:
    x0, j0, T = config.initial_state(), config.mode, config.horizon()
    u = _inputs(config, system)
    kind = IntegratorKind(config.scheme)
    if config.command == "filippov":
        traj = simulate_filippov(system, x0, j0, T, u, tol=config.tol or 1e-10)
    else:
        eps = config.single(config.widths(), "eps")
        relaxed = RelaxedSystem(system, config.relaxation(eps))
        steps = config.steps()
        h: float | None = None
        if config.h or config.tol is None:
            h = config.single(steps, "h") if steps else None
        if h is None and config.tol is None:
            raise ConfigurationError("give --h for fixed steps or --tol for adaptive")
        if config.command == "augmented":
            scheme = IntegratorScheme(kind, h) if h is not None else None
            tol = config.tol if scheme is None else None
            traj = simulate_augmented(relaxed, x0, j0, T, u, scheme=scheme, tol=tol)
        else:
            traj = simulate_point(
                relaxed,
                x0,
                j0,
                T,
                h=h,
                scheme_kind=kind,
                u=u,
                tol=config.tol or 1e-10,
            )
    path = writer.trajectory(traj)
    LOGGER.info("Wrote %s", path)
    return traj, _trajectory_metrics(config, traj)


def _sweep(config: RunConfig, system: HybridSystem, workers: int) -> SweepResult:
    rest_from = config.rest_from
    if config.error == "rest" and rest_from is None:
        if config.example != "bouncing-ball":
            raise ConfigurationError("--rest-from is required for the rest error")
        rest_from = _zeno_time(config)
    return convergence_sweep(
        system,
        _grid(config),
        ErrorKind(config.error),
        config.initial_state(),
        config.mode,
        config.horizon(),
        scheme_kind=IntegratorKind(config.scheme),
        u=_inputs(config, system),
        transition=TransitionFunction(TransitionKind(config.transition)),
        rest_from=rest_from,
        reference_tol=config.tol or 1e-10,
        workers=workers,
    )


def _sensitivity(config: RunConfig, system: HybridSystem, workers: int) -> SweepResult:
    if not config.deltas:
        raise ConfigurationError("--deltas is required for sensitivity")
    eps = config.single(config.widths(), "eps")
    h = config.single(config.steps(), "h")
    relaxed = RelaxedSystem(system, config.relaxation(eps))
    return sensitivity_sweep(
        relaxed,
        IntegratorScheme(IntegratorKind(config.scheme), h),
        config.initial_state(),
        config.mode,
        config.horizon(),
        config.perturbation(),
        config.deltas,
        u=_inputs(config, system),
        workers=workers,
    )


def run(config: RunConfig, workers: int = 1) -> int:
    """Execute one command and write its artifacts; return the exit status."""

    started_at = datetime.now(UTC).isoformat()
    started = time.perf_counter()
    writer = ArtifactWriter(Path(config.out))
    system = load_config_system(config)
    if config.system is not None and config.command != "validate":
        checked = validate_system(system, rng=np.random.default_rng(config.seed))
        if not checked.ok:
            raise InvalidSystemError(checked)
    termination: str | None = None
    metrics: dict[str, float] = {}
    status = EXIT_OK
    if config.command == "validate":
        report = validate_system(system, rng=np.random.default_rng(config.seed))
        writer.report(report)
        print(report.model_dump_json(indent=2))
        if not report.ok:
            for v in report.violations:
                LOGGER.warning("Violation %s: %s", v.code, v.message)
            status = EXIT_INVALID
        metrics["violations"] = float(len(report.violations))
    elif config.command in ("sweep", "sensitivity"):
        if config.command == "sweep":
            result = _sweep(config, system, workers)
        else:
            result = _sensitivity(config, system, workers)
        writer.sweep(result)
        if result.fit is not None:
            metrics["slope"] = result.fit.slope
            metrics["r2"] = result.fit.r2
    else:
        traj, metrics = _simulate(config, system, writer)
        assert traj.termination is not None
        termination = traj.termination.kind.value
    manifest = RunManifest(
        command=config.command,
        config=config.model_dump(mode="json"),
        version=_version(),
        started_at=started_at,
        wall_time=time.perf_counter() - started,
        artifacts=writer.artifacts,
        termination=termination,
        metrics=metrics,
    )
    path = writer.manifest(manifest)
    LOGGER.info("Wrote %s", path)
    return status


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _param(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybrid-relax",
        description="Simulate hybrid systems through relaxed transitions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (
        "validate",
        "simulate",
        "filippov",
        "augmented",
        "sweep",
        "sensitivity",
        "example",
    ):
        cmd = sub.add_parser(name)
        if name == "example":
            cmd.add_argument("name", choices=example_names())
        else:
            cmd.add_argument("system", nargs="?", help="System file (JSON or YAML)")
            cmd.add_argument("--example", choices=example_names())
        cmd.add_argument("--param", action="append", type=_param, default=[])
        cmd.add_argument("--c", type=float, help="Coefficient of restitution")
        cmd.add_argument("--x0", type=_floats)
        cmd.add_argument("--mode", type=int, default=0)
        cmd.add_argument("--scheme", choices=["euler", "rk4"], default="euler")
        cmd.add_argument("--h", type=float, nargs="+", default=[])
        cmd.add_argument("--eps", type=float, nargs="+", default=[])
        cmd.add_argument("--eps-ratio", type=float)
        cmd.add_argument("--T", type=float)
        cmd.add_argument("--tol", type=float)
        cmd.add_argument(
            "--transition", choices=["sine", "smoothstep"], default="sine"
        )
        cmd.add_argument("--inputs", help="Input table (JSON or YAML)")
        cmd.add_argument("--out", default="out")
        cmd.add_argument("--seed", type=int, default=0)
        cmd.add_argument(
            "--error", choices=["filippov", "self", "rest"], default="self"
        )
        cmd.add_argument("--rest-from", type=float)
        cmd.add_argument("--deltas", type=float, nargs="+", default=[])
        cmd.add_argument("--direction", type=_floats)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    is_example = args.command == "example"
    return RunConfig(
        command=args.command,
        system=None if is_example else args.system,
        example=args.name if is_example else args.example,
        params=dict(args.param),
        c=args.c,
        x0=args.x0,
        mode=args.mode,
        scheme=args.scheme,
        h=args.h,
        eps=args.eps,
        eps_ratio=args.eps_ratio,
        T=args.T,
        tol=args.tol,
        transition=args.transition,
        inputs=args.inputs,
        out=args.out,
        seed=args.seed,
        error=args.error,
        rest_from=args.rest_from,
        deltas=args.deltas,
        direction=args.direction,
    )


def _fail(code: int, category: str, exc: BaseException) -> int:
    print(f"{category}: {exc}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None, workers: int = 1) -> int:
    """Parse ``argv``, run the command and map failures to exit codes."""

    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return run(config, workers)
    except FileNotFoundError as exc:
        return _fail(EXIT_NOT_FOUND, "file not found", exc)
    except (ValidationError, yaml.YAMLError, ConfigurationError) as exc:
        return _fail(EXIT_INVALID, "invalid configuration", exc)
    except (RuntimeError, ValueError) as exc:
        LOGGER.exception("Run failed")
        return _fail(EXIT_SIMULATION, "simulation error", exc)


__all__ = [
    "ArtifactWriter",
    "EXIT_INVALID",
    "EXIT_NOT_FOUND",
    "EXIT_OK",
    "EXIT_SIMULATION",
    "InvalidSystemError",
    "RunConfig",
    "build_parser",
    "config_from_args",
    "main",
    "run",
]
