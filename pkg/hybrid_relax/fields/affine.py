"""Affine vector fields ``F x + G u + w``."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from typing import Any

import numpy as np

from .base import Array, VectorField


class AffineField(VectorField):
    """Field ``f(x, u) = F x + G u + w`` with the constant Jacobian ``F``."""

    def __init__(
        self,
        F: Sequence[Sequence[float]] | Array,
        G: Sequence[Sequence[float]] | Array | None = None,
        w: Sequence[float] | Array | None = None,
    ) -> None:
        self.F = np.array(F, dtype=float, ndmin=2)
        n = self.F.shape[0]
        if self.F.shape != (n, n):
            raise ValueError(f"F must be square, got shape {self.F.shape}")
        if G is None or len(G) == 0:
            self.G = np.zeros((n, 0))
        else:
            self.G = np.array(G, dtype=float, ndmin=2)
        if self.G.shape[0] != n:
            raise ValueError(f"G must have {n} rows, got shape {self.G.shape}")
        self.w = np.zeros(n) if w is None else np.array(w, dtype=float)
        if self.w.shape != (n,):
            raise ValueError(f"w must have shape ({n},), got {self.w.shape}")
        for arr in (self.F, self.G, self.w):
            arr.setflags(write=False)
        self.state_dim = n
        self.input_dim = self.G.shape[1]

    @classmethod
    def from_params(
        cls, params: Mapping[str, Any], state_dim: int, input_dim: int
    ) -> AffineField:
        """Build from a config mapping; missing entries default to zero."""

        F = np.array(params.get("F", np.zeros((state_dim, state_dim))), ndmin=2)
        rows = F.shape[0]
        G = params.get("G", np.zeros((rows, input_dim)))
        w = params.get("w", np.zeros(rows))
        field = cls(F, G, w)
        if field.state_dim != state_dim or field.input_dim != input_dim:
            raise ValueError(
                "affine field dimensions "
                f"({field.state_dim}, {field.input_dim}) do not match system "
                f"({state_dim}, {input_dim})"
            )
        return field

    def __call__(self, x: Array, u: Array) -> Array:
        out: Array = self.F @ x + self.w
        if self.input_dim:
            out = out + self.G @ u
        return out

    def jacobian(self, x: Array, u: Array) -> Array:
        return self.F


__all__ = ["AffineField"]
