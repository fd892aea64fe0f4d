"""Pydantic contracts for system files, reports and run artifacts."""

from .results import (
    FitSummary,
    InputTable,
    RunManifest,
    SweepResult,
    SweepRow,
    ValidationReport,
    Violation,
)
from .schemas import SCHEMA_FILES, export_schema, export_schemas
from .system import (
    EdgeSpec,
    FieldSpec,
    GuardSpec,
    HalfSpace,
    ModeSpec,
    ResetSpec,
    SystemSpec,
)

__all__ = [
    "SCHEMA_FILES",
    "EdgeSpec",
    "FieldSpec",
    "FitSummary",
    "GuardSpec",
    "HalfSpace",
    "InputTable",
    "ModeSpec",
    "ResetSpec",
    "RunManifest",
    "SweepResult",
    "SweepRow",
    "SystemSpec",
    "ValidationReport",
    "Violation",
    "export_schema",
    "export_schemas",
]
