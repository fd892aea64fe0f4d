"""Vector field implementations and factory."""

from __future__ import annotations

from collections.abc import Callable, Mapping
from typing import Any

from .affine import AffineField
from .base import Array, VectorField
from .pendulum import DoublePendulumField

FieldFactory = Callable[[Mapping[str, Any], int, int], VectorField]

_REGISTRY: dict[str, FieldFactory] = {
    "affine": AffineField.from_params,
    "double_pendulum": DoublePendulumField.from_params,
}


def register_field(kind: str, factory: FieldFactory) -> None:
    """Register ``factory`` under ``kind`` for use in system files."""

    _REGISTRY[kind] = factory


def create_field(
    kind: str, params: Mapping[str, Any], state_dim: int, input_dim: int
) -> VectorField:
    """Return a ``VectorField`` for ``kind`` built from ``params``."""

    try:
        factory = _REGISTRY[kind]
    except KeyError:
        raise KeyError(f"unknown field kind {kind!r}") from None
    return factory(params, state_dim, input_dim)


__all__ = [
    "AffineField",
    "Array",
    "DoublePendulumField",
    "VectorField",
    "create_field",
    "register_field",
]
