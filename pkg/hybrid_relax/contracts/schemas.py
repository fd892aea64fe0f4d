"""JSON schema export for the file formats read and written by the CLI."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from pydantic import BaseModel

from .results import InputTable, RunManifest, SweepResult, ValidationReport
from .system import SystemSpec

LOGGER = logging.getLogger(__name__)

SCHEMA_FILES: dict[str, type[BaseModel]] = {
    "system_v1.json": SystemSpec,
    "input_table_v1.json": InputTable,
    "validation_report_v1.json": ValidationReport,
    "sweep_result_v1.json": SweepResult,
    "run_manifest_v1.json": RunManifest,
}


def export_schema(path: Path, model: type[BaseModel] = SystemSpec) -> Path:
    """Write the schema of ``model`` to ``path`` unless it is already current."""

    content = json.dumps(model.model_json_schema(), indent=2) + "\n"
    existing = path.read_text() if path.exists() else ""
    if existing != content:
        path.write_text(content)
        LOGGER.debug("Wrote %s schema to %s", model.__name__, path)
    return path


def export_schemas(directory: Path) -> list[Path]:
    """Export every contract schema into ``directory``."""

    directory.mkdir(parents=True, exist_ok=True)
    return [export_schema(directory / name, m) for name, m in SCHEMA_FILES.items()]


__all__ = ["SCHEMA_FILES", "export_schema", "export_schemas"]
