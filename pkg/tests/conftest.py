import numpy as np
import pytest

from hybrid_relax.model import HybridSystem
from hybrid_relax.registry import bouncing_ball

from .systems import (
    ROTATION,
    ROTATION_BACK,
    affine,
    bimodal_tree,
    build,
    glued_tree,
    half_planes,
)


@pytest.fixture
def ball() -> HybridSystem:
    return bouncing_ball(c=0.5, g=1.0)


@pytest.fixture
def glued() -> HybridSystem:
    return build(glued_tree())


@pytest.fixture
def crossing() -> HybridSystem:
    return half_planes((1.0, 1.0), (1.0, 2.0))


@pytest.fixture
def sliding() -> HybridSystem:
    return half_planes((1.0, 1.0), (1.0, -1.0))


@pytest.fixture
def rotated() -> HybridSystem:
    """Quarter-turn transition from the lower strip onto ``x1 = 0`` of mode 1."""

    return build(
        bimodal_tree(
            [(-1.0, 1.0), (-1.0, 0.0)],
            [(0.0, 2.0), (-1.0, 1.0)],
            ((0.0, 1.0), 0.0),
            ((-1.0, 0.0), 0.0),
            ROTATION,
            ROTATION_BACK,
            affine(F=((0.2, -0.5), (0.3, 0.1)), w=(0.4, 1.0)),
            affine(F=((-0.1, 0.6), (0.2, -0.3)), w=(1.0, 0.5)),
        )
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
