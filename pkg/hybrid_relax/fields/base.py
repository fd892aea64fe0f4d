"""Base protocol for mode vector fields."""

from __future__ import annotations

from typing import Protocol

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.float64]


class VectorField(Protocol):
    """Interface for the continuous dynamics ``f_j(x, u)`` of one mode."""

    state_dim: int
    input_dim: int

    def __call__(self, x: Array, u: Array) -> Array:
        """Return ``f(x, u)``; defined on all of R^n."""

    def jacobian(self, x: Array, u: Array) -> Array | None:
        """Return ``df/dx`` at ``(x, u)`` or ``None`` when not available."""


__all__ = ["Array", "VectorField"]
