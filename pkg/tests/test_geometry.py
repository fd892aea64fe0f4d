import numpy as np
import pytest

from hybrid_relax.geometry import (
    GeometryError,
    RankDeficientEdgeError,
    RegionKind,
    SystemGeometry,
    build_edge_geometry,
    project_to_guard_plane,
    relaxed_guard_value,
)
from hybrid_relax.model import EdgeKind, HybridSystem
from hybrid_relax.registry import bouncing_ball, double_pendulum


def test_glued_change_of_basis(glued: HybridSystem) -> None:
    geom = build_edge_geometry(glued, 0, 0.1)
    assert geom.kind is EdgeKind.REVERSIBLE
    assert np.allclose(geom.A_bar, np.eye(2))
    assert np.allclose(geom.b_bar, 0.0)
    assert np.allclose(geom.b_bar_eps, [0.0, -0.1])
    assert geom.full_rank and geom.p == 0
    assert np.allclose(geom.receiving_normal, [0.0, -1.0])
    assert geom.receiving_offset == -1.0


def test_rotated_change_of_basis(rotated: HybridSystem) -> None:
    geom = build_edge_geometry(rotated, 0, 0.2)
    assert np.allclose(geom.A_bar, [[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(geom.bar_reset(np.array([0.5, 0.1])), [-0.1, 0.5])
    assert np.allclose(geom.solve(np.array([1.0, 2.0])), [2.0, 1.0])


def test_bouncing_ball_change_of_basis(ball: HybridSystem) -> None:
    geom = build_edge_geometry(ball, 0, 0.05)
    assert geom.kind is EdgeKind.NON_REVERSIBLE
    assert np.allclose(geom.A_bar, np.diag([-1.0, -0.5]))
    assert np.allclose(geom.b_bar_eps, [-0.05, 0.0])


def test_relaxed_reset_identity(
    rotated: HybridSystem, rng: np.random.Generator
) -> None:
    eps = 0.3
    geom = build_edge_geometry(rotated, 0, eps)
    edge = rotated.edge(0)
    for x in rng.uniform(-1.0, 1.0, size=(1000, 2)):
        expected = edge.reset(project_to_guard_plane(edge, x))
        expected -= geom.receiving_normal * relaxed_guard_value(edge, eps, x)
        assert np.allclose(geom.bar_reset(x), expected)
        assert geom.receiving_value(geom.bar_reset(x)) == pytest.approx(
            eps - geom.guard_value(x)
        )


def test_unrelaxed_round_trip(rotated: HybridSystem, rng: np.random.Generator) -> None:
    there = build_edge_geometry(rotated, 0, 0.0)
    back = build_edge_geometry(rotated, 1, 0.0)
    for x in rng.uniform(-1.0, 1.0, size=(1000, 2)):
        assert np.allclose(back.bar_reset(there.bar_reset(x)), x)


def test_negative_eps_rejected(glued: HybridSystem) -> None:
    with pytest.raises(GeometryError, match="nonnegative"):
        build_edge_geometry(glued, 0, -1.0)


def test_plastic_impact_is_rank_deficient() -> None:
    system = bouncing_ball(c=0.0)
    geom = build_edge_geometry(system, 0, 0.01)
    assert geom.rank == 1
    assert geom.p == 1
    assert np.allclose(np.abs(geom.null_basis[:, 0]), [0.0, 1.0])
    assert geom.z_bound > 0
    with pytest.raises(RankDeficientEdgeError):
        geom.solve(np.ones(2))
    x, z = np.array([-0.005, -1.0]), np.array([0.3])
    post, z_post = geom.augmented_reset(x, z)
    assert np.allclose(post, geom.A_bar @ x + geom.null_basis @ z + geom.b_bar_eps)
    assert np.array_equal(z_post, [0.0])
    with pytest.raises(ValueError, match="shape"):
        geom.augmented_reset(x, np.zeros(2))


def test_right_inverse_is_minimal_norm() -> None:
    geom = build_edge_geometry(bouncing_ball(c=0.0), 0, 0.01)
    assert np.allclose(geom.A_tilde @ geom.A_tilde_pinv, np.eye(2))


def test_pendulum_lock_has_one_free_direction() -> None:
    geometry = SystemGeometry(double_pendulum(c=0.0), 1e-3)
    geom = geometry.edge(0)
    assert geom.p == 1
    assert geometry.z_dim == 1
    assert geometry.z_slices == {0: slice(0, 1)}
    assert np.allclose(np.abs(geom.null_basis[:, 0]), [0.0, 0.0, 0.0, 1.0])


def test_membership_regions(glued: HybridSystem) -> None:
    geometry = SystemGeometry(glued, 0.1)
    cases = [
        ((0.0, 0.0), RegionKind.INTERIOR, None, "interior"),
        ((0.0, 1.05), RegionKind.STRIP, 0, "strip:0"),
        ((0.0, 1.5), RegionKind.PROJECTED, 0, "projected:0"),
        ((5.0, 1.05), RegionKind.OUTSIDE, None, "outside"),
        ((0.0, -2.0), RegionKind.OUTSIDE, None, "outside"),
    ]
    for x, kind, edge, tag in cases:
        region = geometry.membership(0, np.array(x))
        assert region.kind is kind
        assert region.edge == edge
        assert region.tag == tag


def test_extension_edge(glued: HybridSystem) -> None:
    geometry = SystemGeometry(glued, 0.1)
    found = geometry.extension_edge(0, np.array([0.0, 1.5]))
    assert found is not None and found.id == 0
    assert geometry.extension_edge(0, np.array([0.0, -2.0])) is None


def test_in_facet(glued: HybridSystem) -> None:
    geom = build_edge_geometry(glued, 0, 0.1)
    assert geom.in_facet(np.array([0.5, 1.05]))
    assert not geom.in_facet(np.array([1.5, 1.05]))
    assert np.allclose(geom.project(np.array([0.5, 1.05])), [0.5, 1.0])


def test_bouncing_ball_guard_and_reset(ball: HybridSystem) -> None:
    edge = ball.edge(0)
    x = np.array([0.25, -1.0])
    assert edge.guard_value(x) == pytest.approx(-0.25)
    assert relaxed_guard_value(edge, 0.1, x) == pytest.approx(-0.35)
    assert np.allclose(project_to_guard_plane(edge, np.array([-0.3, 2.0])), [0, 2])
    plain = build_edge_geometry(ball, 0, 0.0)
    assert np.allclose(plain.bar_reset(np.array([-0.3, -2.0])), [0.3, 1.0])
    relaxed = SystemGeometry(ball, 0.1)
    beyond = np.array([-0.5, -1.0])
    assert relaxed.membership(0, beyond).kind is RegionKind.PROJECTED
    assert np.allclose(relaxed.edge(0).bar_reset(beyond), [0.4, 0.5])
    assert relaxed.membership(0, np.array([-0.05, -1.0])).tag == "strip:0"
