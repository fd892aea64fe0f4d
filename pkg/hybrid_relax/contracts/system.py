"""System definition contract."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field, field_validator, model_validator


class HalfSpace(BaseModel):
    """One inequality ``normal . x <= offset`` of a mode polytope."""

    normal: list[float] = Field(..., description="Outward unit normal")
    offset: float = Field(..., description="Offset of the bounding hyperplane")


class FieldSpec(BaseModel):
    """Vector field reference: a registered kind plus its parameters."""

    kind: str = Field("affine", description="Registered field kind")
    params: dict[str, Any] = Field(
        default_factory=dict, description="Parameters passed to the field factory"
    )


class ModeSpec(BaseModel):
    """A mode: polytope domain and continuous dynamics."""

    id: int = Field(..., ge=0, description="Mode index")
    halfspaces: list[HalfSpace] = Field(
        ..., min_length=1, description="Half-space description of the domain"
    )
    field: FieldSpec = Field(default_factory=FieldSpec)


class GuardSpec(BaseModel):
    """Guard plane ``normal . x = offset`` on a facet of the source mode."""

    normal: list[float]
    offset: float


class ResetSpec(BaseModel):
    """Affine reset ``x -> A x + b``."""

    A: list[list[float]] = Field(..., description="Square reset matrix")
    b: list[float] = Field(..., description="Reset offset")

    @model_validator(mode="after")
    def _square(self) -> ResetSpec:
        n = len(self.b)
        if len(self.A) != n or any(len(row) != n for row in self.A):
            raise ValueError(f"reset matrix must be {n}x{n}")
        return self


class EdgeSpec(BaseModel):
    """A discrete transition between two modes."""

    id: int = Field(..., ge=0)
    source: int = Field(..., ge=0)
    target: int = Field(..., ge=0)
    guard: GuardSpec
    reset: ResetSpec
    partner: int | None = Field(None, description="Edge whose reset inverts this one")
    target_facet: GuardSpec | None = Field(
        None, description="Facet of the target domain receiving the reset image"
    )


class SystemSpec(BaseModel):
    """Complete on-disk description of a hybrid system."""

    state_dim: int = Field(..., ge=1)
    input_dim: int = Field(0, ge=0)
    modes: list[ModeSpec] = Field(..., min_length=1)
    edges: list[EdgeSpec] = Field(default_factory=list)
    input_box: list[tuple[float, float]] = Field(
        default_factory=list, description="Per-coordinate [lo, hi] input bounds"
    )

    @field_validator("input_box")
    @classmethod
    def _ordered_box(
        cls, value: list[tuple[float, float]]
    ) -> list[tuple[float, float]]:
        for lo, hi in value:
            if lo > hi:
                raise ValueError(f"input bound [{lo}, {hi}] is empty")
        return value

    @model_validator(mode="after")
    def _dimensions(self) -> SystemSpec:
        n = self.state_dim
        if len(self.input_box) != self.input_dim:
            raise ValueError(
                f"input_box has {len(self.input_box)} entries, "
                f"expected {self.input_dim}"
            )
        for mode in self.modes:
            for hs in mode.halfspaces:
                if len(hs.normal) != n:
                    raise ValueError(
                        f"mode {mode.id}: normal of length {len(hs.normal)}"
                    )
        for edge in self.edges:
            vectors = [edge.guard.normal, edge.reset.b]
            if edge.target_facet is not None:
                vectors.append(edge.target_facet.normal)
            if any(len(v) != n for v in vectors):
                raise ValueError(f"edge {edge.id}: vector length differs from {n}")
        return self


__all__ = [
    "EdgeSpec",
    "FieldSpec",
    "GuardSpec",
    "HalfSpace",
    "ModeSpec",
    "ResetSpec",
    "SystemSpec",
]
