import numpy as np
import pytest

from yellowlight import Intention
from yellowlight.core import ControlBounds, ControlSequence, TrajectoryPoint, rollout
from yellowlight.errors import InfeasibleSceneException, ParameterException
from yellowlight.features import FeatureScaling, WeightVector, compute_features
from yellowlight.trajopt import CostModel, OptimizerConfig, objective, optimize_trajectory


@pytest.fixture
def short():
    return OptimizerConfig(horizon=10, max_iters=50)


class TestOptimizerConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [{"horizon": 0}, {"tau": 0.0}, {"restarts": 0}, {"grad_step": 0.0}, {"tol": -1.0}],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ParameterException):
            OptimizerConfig(**kwargs)


class TestCostModel:
    def test_matches_objective(self, front_env):
        initial = TrajectoryPoint(t=0.0, x=40.0, y=0.0, v=11.0)
        theta = WeightVector(Intention.STOP, [0.5, 2.0, 1.0, 3.0, 0.01])
        u = np.array([1.0, -0.5, 0.0, 0.2, 0.0, -0.1])
        cost = CostModel(theta, front_env, initial, horizon=3)
        trajectory = rollout(initial, ControlSequence.from_array(u, ControlBounds()))
        assert cost(u)[0] == pytest.approx(objective(trajectory, theta, front_env))

    def test_scaling_for_other_maneuver(self, free_env):
        with pytest.raises(ParameterException):
            CostModel(
                WeightVector.ones(Intention.PASS),
                free_env,
                TrajectoryPoint(t=0.0, x=0.0, y=0.0, v=10.0),
                horizon=3,
                scaling=FeatureScaling.unit(Intention.STOP),
            )


class TestOptimize:
    def test_cruising_at_speed_limit_is_free(self, free_env, short):
        initial = TrajectoryPoint(t=0.0, x=0.0, y=0.0, v=free_env.v_lim)
        result = optimize_trajectory(WeightVector.ones(Intention.PASS), free_env, initial, short)
        assert result.objective == 0.0
        assert np.all(result.trajectory.v == free_env.v_lim)

    def test_standing_at_queue_is_free(self, free_env, short):
        initial = TrajectoryPoint(t=0.0, x=free_env.x_queue, y=0.0, v=0.0)
        result = optimize_trajectory(WeightVector.ones(Intention.STOP), free_env, initial, short)
        assert result.objective == 0.0
        assert np.all(result.trajectory.x == free_env.x_queue)

    def test_trajectory_replays_from_controls(self, front_env, short):
        initial = TrajectoryPoint(t=0.0, x=50.0, y=0.0, v=12.0)
        result = optimize_trajectory(WeightVector.ones(Intention.STOP), front_env, initial, short)
        assert rollout(initial, result.controls, short.tau) == result.trajectory
        assert len(result.trajectory) == short.horizon + 1
        assert result.trajectory.start == initial
        features = compute_features(result.trajectory, front_env, Intention.STOP)
        assert np.allclose(features.as_array(), result.features.as_array())

    def test_controls_within_bounds(self, front_env, short):
        initial = TrajectoryPoint(t=0.0, x=30.0, y=0.0, v=14.0)
        result = optimize_trajectory(WeightVector.ones(Intention.STOP), front_env, initial, short)
        bounds = short.bounds
        assert all(bounds.a_min <= a <= bounds.a_max for a in result.controls.a)
        assert all(abs(psi) <= bounds.psi_max for psi in result.controls.psi)

    def test_never_worse_than_its_starts(self, front_env, short):
        initial = TrajectoryPoint(t=0.0, x=50.0, y=0.0, v=9.0)
        result = optimize_trajectory(WeightVector.ones(Intention.PASS), front_env, initial, short)
        assert len(result.start_objectives) == short.restarts
        assert result.objective <= min(result.start_objectives)
        for history in result.histories:
            assert all(b < a for a, b in zip(history, history[1:]))

    @pytest.mark.parametrize("factor", [0.5, 2.0])
    @pytest.mark.parametrize("maneuver", list(Intention))
    def test_weight_scale_does_not_change_result(self, front_env, short, factor, maneuver):
        initial = TrajectoryPoint(t=0.0, x=45.0, y=0.0, v=11.0)
        theta = WeightVector(maneuver, [0.7, 1.3, 2.0, 0.5, 1.1])
        scaled = WeightVector(maneuver, [factor * w for w in theta.theta])
        first = optimize_trajectory(theta, front_env, initial, short)
        second = optimize_trajectory(scaled, front_env, initial, short)
        assert first.trajectory == second.trajectory
        assert first.controls == second.controls
        assert second.objective == factor * first.objective

    def test_deterministic(self, front_env):
        cfg = OptimizerConfig(horizon=8, max_iters=30, restarts=5, seed=3)
        initial = TrajectoryPoint(t=0.0, x=45.0, y=0.0, v=11.0)
        theta = WeightVector.ones(Intention.PASS)
        first = optimize_trajectory(theta, front_env, initial, cfg)
        second = optimize_trajectory(theta, front_env, initial, cfg)
        assert first.trajectory == second.trajectory

    def test_start_inside_front_vehicle(self, front_env, short):
        initial = TrajectoryPoint(t=0.0, x=78.0, y=0.0, v=10.0)
        with pytest.raises(InfeasibleSceneException):
            optimize_trajectory(WeightVector.ones(Intention.PASS), front_env, initial, short)
