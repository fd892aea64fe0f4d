import math

import numpy as np
import pytest
import scipy.linalg

from hybrid_relax.analysis import (
    HybridPoint,
    contact_intervals,
    quotient_distance,
    rest_error,
    trajectory_distance,
)
from hybrid_relax.execution import (
    simulate_augmented,
    simulate_discrete,
    simulate_relaxed_reference,
)
from hybrid_relax.integrators import IntegratorKind, IntegratorScheme
from hybrid_relax.model import HybridSystem
from hybrid_relax.registry import bouncing_ball_zeno_time, double_pendulum
from hybrid_relax.relaxation import RelaxationParams, RelaxedSystem
from hybrid_relax.sweeps import (
    ErrorKind,
    GridPoint,
    convergence_sweep,
    fit_slope,
    sensitivity_sweep,
)

from .systems import affine, box, build

BALL_X0 = np.array([1.0, 0.0])
EPS_GRID = [1e-2, 1e-3, 1e-4, 1e-5]
OSCILLATOR = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _oscillator() -> HybridSystem:
    return build(
        {
            "state_dim": 2,
            "modes": [
                {
                    "id": 0,
                    "halfspaces": box([(-5.0, 5.0), (-5.0, 5.0)]),
                    "field": affine(F=OSCILLATOR.tolist()),
                }
            ],
        }
    )


def _rotation(t: float) -> np.ndarray:
    return scipy.linalg.expm(OSCILLATOR * t) @ np.array([1.0, 0.0])


@pytest.mark.parametrize(
    ("kind", "steps", "order", "spread"),
    [
        (IntegratorKind.EULER, (1e-1, 1e-2, 1e-3, 1e-4), 1.0, 0.2),
        (IntegratorKind.RK4, (0.2, 0.1, 0.05, 0.025), 4.0, 0.3),
    ],
)
def test_integrator_order_on_smooth_arc(
    kind: IntegratorKind, steps: tuple[float, ...], order: float, spread: float
) -> None:
    result = convergence_sweep(
        _oscillator(),
        [GridPoint(h, 1e-3) for h in steps],
        ErrorKind.ANALYTIC,
        np.array([1.0, 0.0]),
        0,
        1.0,
        scheme_kind=kind,
        oracle=_rotation,
    )
    assert result.fit is not None
    assert result.fit.slope == pytest.approx(order, abs=spread)


def test_crossing_converges_linearly_in_eps(crossing: HybridSystem) -> None:
    def exact(t: float) -> np.ndarray:
        return np.array([t, -1.0 + t if t <= 1.0 else 2.0 * (t - 1.0)])

    result = convergence_sweep(
        crossing,
        [GridPoint(None, eps) for eps in EPS_GRID],
        ErrorKind.ANALYTIC,
        np.array([0.0, -1.0]),
        0,
        2.0,
        oracle=exact,
        reference_tol=1e-12,
    )
    assert result.fit is not None
    assert result.fit.axis == "eps"
    assert 0.8 <= result.fit.slope <= 1.2


def test_discrete_converges_to_relaxed_reference_at_scheme_order(
    crossing: HybridSystem,
) -> None:
    relaxed = RelaxedSystem(crossing, RelaxationParams(0.1))
    x0 = np.array([0.0, -1.0])
    reference = simulate_relaxed_reference(relaxed, x0, 0, 2.0, tol=1e-12)
    steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3]
    errors = []
    for h in steps:
        scheme = IntegratorScheme(IntegratorKind.EULER, h)
        traj = simulate_discrete(relaxed, scheme, x0, 0, 2.0)
        errors.append(trajectory_distance(relaxed, traj, reference, norm="max"))
    fit = fit_slope("h", steps, errors)
    assert fit.slope == pytest.approx(IntegratorKind.EULER.order, abs=0.2)


def test_sliding_converges_and_stays_in_strip(sliding: HybridSystem) -> None:
    errors = []
    for eps in EPS_GRID:
        relaxed = RelaxedSystem(sliding, RelaxationParams(eps))
        traj = simulate_relaxed_reference(
            relaxed, np.array([0.0, -1.0]), 0, 3.0, tol=1e-12
        )
        exact = np.stack([traj.t, np.minimum(traj.t - 1.0, 0.0)], axis=1)
        errors.append(float(np.max(np.abs(traj.x - exact))))
        entered = traj.regions.index("strip:0")
        assert all(tag == "strip:0" for tag in traj.regions[entered:])
        tail = traj.x[entered:, 1]
        assert np.all(tail >= 0.0) and np.all(tail <= eps)
    fit = fit_slope("eps", EPS_GRID, errors)
    assert 0.8 <= fit.slope <= 1.2


@pytest.mark.slow
def test_bouncing_ball_comes_to_rest(ball: HybridSystem) -> None:
    relaxed = RelaxedSystem(ball, RelaxationParams(1e-6))
    scheme = IntegratorScheme(IntegratorKind.EULER, 1e-4)
    traj = simulate_discrete(relaxed, scheme, BALL_X0, 0, 6.0)
    assert bouncing_ball_zeno_time((1.0, 0.0), 0.5) == pytest.approx(4.2426, abs=1e-4)
    assert len(traj.events) > 10
    assert rest_error(traj, 4.35) <= 5e-3


@pytest.mark.slow
def test_bouncing_ball_rest_error_converges(ball: HybridSystem) -> None:
    steps = (1e-2, 1e-3, 1e-4)
    result = convergence_sweep(
        ball,
        [GridPoint(h, 0.01 * h) for h in steps],
        ErrorKind.REST,
        BALL_X0,
        0,
        6.0,
        rest_from=3.0 * math.sqrt(2.0),
    )
    errors = [row.error for row in result.rows]
    assert errors[0] > errors[1] > errors[2]
    assert result.fit is not None
    assert result.fit.slope >= 0.8


@pytest.mark.slow
def test_lipschitz_in_initial_state(
    ball: HybridSystem, rng: np.random.Generator
) -> None:
    relaxed = RelaxedSystem(ball, RelaxationParams(1e-3))
    scheme = IntegratorScheme(IntegratorKind.EULER, 1e-4)
    nominal = simulate_discrete(relaxed, scheme, BALL_X0, 0, 2.0)
    assert len(nominal.events) == 1
    ratios = []
    for _ in range(20):
        d = rng.normal(size=2)
        d *= 1e-3 / np.linalg.norm(d)
        perturbed = simulate_discrete(relaxed, scheme, BALL_X0 + d, 0, 2.0)
        ratios.append(trajectory_distance(relaxed, perturbed, nominal) / 1e-3)
    assert min(ratios) >= 1.0 - 1e-9
    assert max(ratios) / min(ratios) <= 10.0


@pytest.mark.slow
def test_sensitivity_prediction_improves_with_delta() -> None:
    relaxed = RelaxedSystem(double_pendulum(c=0.0), RelaxationParams(1e-3))
    assert relaxed.z_dim == 1
    result = sensitivity_sweep(
        relaxed,
        IntegratorScheme(IntegratorKind.EULER, 1e-5),
        np.radians([20.0, 0.0, 2.0, 0.0]),
        0,
        1.0,
        np.radians([0.0, 0.0, 1.0, 0.0]),
        [1e-1, 1e-2, 1e-3],
    )
    scaled = [row.error / row.delta for row in result.rows if row.delta]
    assert scaled[0] > scaled[1] > scaled[2]
    assert scaled[-1] / scaled[0] <= 0.2


@pytest.mark.slow
def test_plastic_stop_locks_the_pendulum() -> None:
    relaxed = RelaxedSystem(double_pendulum(c=0.0), RelaxationParams(1e-5))
    scheme = IntegratorScheme(IntegratorKind.EULER, 1e-5)
    x0 = np.radians([25.0, 0.0, 35.0, 0.0])
    traj = simulate_augmented(relaxed, x0, 0, 10.0, scheme=scheme)
    locks = [b - a for a, b in traj.strip_intervals() if b - a > 0.05]
    assert locks
    for a, b in traj.strip_intervals():
        inside = (traj.t >= a) & (traj.t <= b)
        assert np.all(np.abs(traj.x[inside, 2]) <= 1e-5 + 1e-12)


@pytest.mark.slow
def test_restitution_stop_locks_then_releases() -> None:
    relaxed = RelaxedSystem(double_pendulum(c=0.5), RelaxationParams(1e-5))
    scheme = IntegratorScheme(IntegratorKind.EULER, 1e-5)
    x0 = np.radians([25.0, 0.0, 35.0, 0.0])
    traj = simulate_discrete(relaxed, scheme, x0, 0, 20.0)
    locks = [(a, b) for a, b in contact_intervals(relaxed, traj, 0) if b - a > 0.05]
    assert len(locks) >= 2
    for (_, end), (begin, _) in zip(locks, locks[1:]):
        between = (traj.t > end) & (traj.t < begin)
        assert np.max(traj.x[between, 2]) > np.radians(5.0)


def test_glued_points_have_zero_distance(glued: HybridSystem) -> None:
    relaxed = RelaxedSystem(glued, RelaxationParams(0.05))
    geom = relaxed.geometry.edge(0)
    for s in np.linspace(-0.9, 0.9, 7):
        w = np.array([s, 1.05])
        d = quotient_distance(
            relaxed, HybridPoint(0, w), HybridPoint(1, geom.bar_reset(w))
        )
        assert d == pytest.approx(0.0, abs=1e-12)
