"""Small hybrid systems shared by the test modules."""

from collections.abc import Sequence
from typing import Any

from hybrid_relax.contracts import SystemSpec
from hybrid_relax.model import HybridSystem, build_system


def box(bounds: Sequence[tuple[float, float]]) -> list[dict[str, Any]]:
    n = len(bounds)
    rows = []
    for i, (lo, hi) in enumerate(bounds):
        up = [0.0] * n
        up[i] = 1.0
        down = [0.0] * n
        down[i] = -1.0
        rows.append({"normal": up, "offset": hi})
        rows.append({"normal": down, "offset": -lo})
    return rows


def affine(
    F: Sequence[Sequence[float]] | None = None, w: Sequence[float] = (0.0, 0.0)
) -> dict[str, Any]:
    params: dict[str, Any] = {"w": list(w)}
    if F is not None:
        params["F"] = [list(row) for row in F]
    return {"kind": "affine", "params": params}


def bimodal_tree(
    d1: Sequence[tuple[float, float]],
    d2: Sequence[tuple[float, float]],
    guard: tuple[Sequence[float], float],
    back: tuple[Sequence[float], float],
    A: Sequence[Sequence[float]],
    A_back: Sequence[Sequence[float]],
    f1: dict[str, Any],
    f2: dict[str, Any],
) -> dict[str, Any]:
    """Two modes joined by a reversible pair of edges ``0: 0 -> 1``, ``1: 1 -> 0``."""

    return {
        "state_dim": 2,
        "modes": [
            {"id": 0, "halfspaces": box(d1), "field": f1},
            {"id": 1, "halfspaces": box(d2), "field": f2},
        ],
        "edges": [
            {
                "id": 0,
                "source": 0,
                "target": 1,
                "guard": {"normal": list(guard[0]), "offset": guard[1]},
                "reset": {"A": [list(r) for r in A], "b": [0.0, 0.0]},
                "partner": 1,
            },
            {
                "id": 1,
                "source": 1,
                "target": 0,
                "guard": {"normal": list(back[0]), "offset": back[1]},
                "reset": {"A": [list(r) for r in A_back], "b": [0.0, 0.0]},
                "partner": 0,
            },
        ],
    }


IDENTITY = ((1.0, 0.0), (0.0, 1.0))
ROTATION = ((0.0, -1.0), (1.0, 0.0))
ROTATION_BACK = ((0.0, 1.0), (-1.0, 0.0))


def build(tree: dict[str, Any]) -> HybridSystem:
    return build_system(SystemSpec.model_validate(tree))


def glued_tree() -> dict[str, Any]:
    return bimodal_tree(
        [(-1.0, 1.0), (-1.0, 1.0)],
        [(-1.0, 1.0), (1.0, 3.0)],
        ((0.0, 1.0), 1.0),
        ((0.0, -1.0), -1.0),
        IDENTITY,
        IDENTITY,
        affine(w=(0.0, 1.0)),
        affine(w=(0.0, 1.0)),
    )


def half_planes(f1: Sequence[float], f2: Sequence[float]) -> HybridSystem:
    """Lower and upper half of ``[-5, 5]^2`` split at ``x2 = 0``."""

    return build(
        bimodal_tree(
            [(-5.0, 5.0), (-5.0, 0.0)],
            [(-5.0, 5.0), (0.0, 5.0)],
            ((0.0, 1.0), 0.0),
            ((0.0, -1.0), 0.0),
            IDENTITY,
            IDENTITY,
            affine(w=f1),
            affine(w=f2),
        )
    )
