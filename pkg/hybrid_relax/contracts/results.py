"""Contracts for validation reports, input tables, sweeps and run manifests."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field, model_validator


class Violation(BaseModel):
    """A single violated structural invariant of a system."""

    code: str = Field(..., description="Stable identifier of the invariant")
    message: str = Field(..., description="Human readable explanation")
    mode: int | None = Field(None, description="Offending mode, if any")
    edge: int | None = Field(None, description="Offending edge, if any")


class ValidationReport(BaseModel):
    """Outcome of ``validate_system``; empty iff the system is valid."""

    violations: list[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class InputTable(BaseModel):
    """Piecewise-constant input ``u(t) = values[i]`` on ``[t_i, t_{i+1})``."""

    breakpoints: list[float] = Field(..., min_length=1)
    values: list[list[float]] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _consistent(self) -> InputTable:
        if len(self.breakpoints) != len(self.values):
            raise ValueError("breakpoints and values must have equal length")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        widths = {len(v) for v in self.values}
        if len(widths) > 1:
            raise ValueError("all input values must have the same length")
        return self


class SweepRow(BaseModel):
    """One grid point of a convergence or sensitivity sweep."""

    h: float | None = Field(
        None, gt=0.0, description="Integration step; None for adaptive runs"
    )
    eps: float = Field(..., gt=0.0, description="Relaxation width")
    delta: float | None = Field(None, description="Perturbation size")
    error: float = Field(..., ge=0.0, description="Error metric at this grid point")
    slope_running: float | None = Field(
        None, description="Log-log slope against the previous row"
    )
    wall_time: float = Field(..., ge=0.0, description="Seconds spent simulating")


class FitSummary(BaseModel):
    """Least-squares fit of ``log(error)`` against ``log(axis)``."""

    axis: Literal["h", "eps", "delta"]
    slope: float
    intercept: float
    r2: float


class SweepResult(BaseModel):
    """Rows of a sweep in grid order plus the fitted slope."""

    kind: str = Field(..., description="Error kind or 'sensitivity'")
    rows: list[SweepRow] = Field(default_factory=list)
    fit: FitSummary | None = None


class RunManifest(BaseModel):
    """Record sufficient to re-run a CLI command."""

    command: str
    config: dict[str, Any] = Field(..., description="Full RunConfig echo")
    version: str
    started_at: str = Field(..., description="UTC ISO-8601 start time")
    wall_time: float = Field(..., ge=0.0)
    artifacts: list[str] = Field(default_factory=list)
    termination: str | None = None
    metrics: dict[str, float] = Field(
        default_factory=dict, description="Scalar summaries such as rest error"
    )


__all__ = [
    "FitSummary",
    "InputTable",
    "RunManifest",
    "SweepResult",
    "SweepRow",
    "ValidationReport",
    "Violation",
]
