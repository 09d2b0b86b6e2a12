import pytest

from yellowlight import Intention
from yellowlight.core import Trajectory, TrajectoryPoint
from yellowlight.errors import ParameterException, ShapeException
from yellowlight.intention import fit_bn, intention_dataset
from yellowlight.online import (
    DriverCharacteristic,
    OnlineConfig,
    RollingPredictor,
    constant_velocity_baseline,
    read_prediction_logs,
    rolling_predict,
    update_lambda,
    write_prediction_logs,
)
from yellowlight.trajopt import OptimizerConfig, optimize_trajectory

from .conftest import constant_speed

GRID = (0.3, 0.5, 0.7)


@pytest.fixture
def toy_bn(toy_records):
    return fit_bn(intention_dataset(toy_records), k=2)


@pytest.fixture
def online():
    return OnlineConfig(
        lambda_grid=GRID,
        optimizer=OptimizerConfig(horizon=5, max_iters=20),
        scheduler="synchronous",
    )


class TestDriverCharacteristic:
    def test_initial_lambda_on_grid(self):
        with pytest.raises(ParameterException):
            DriverCharacteristic(lambda_=0.45, grid=GRID)

    def test_grid_must_increase(self):
        with pytest.raises(ParameterException):
            DriverCharacteristic(lambda_=0.5, grid=(0.5, 0.3))
        with pytest.raises(ParameterException):
            DriverCharacteristic(lambda_=0.5, grid=(0.5, 1.2))

    def test_online_config(self):
        with pytest.raises(ParameterException):
            OnlineConfig(replan_interval=0.0)
        with pytest.raises(ParameterException):
            OnlineConfig(initial_lambda=0.25)


class TestUpdateLambda:
    def test_best_candidate_wins(self):
        observed = constant_speed(0.0, 10.0, 5)
        candidates = {
            0.3: constant_speed(0.0, 9.0, 6),
            0.5: constant_speed(0.0, 11.0, 6),
            0.7: constant_speed(0.0, 10.0, 6),
        }
        dc = update_lambda(DriverCharacteristic(lambda_=0.5, grid=GRID), candidates, observed)
        assert dc.lambda_ == 0.7

    def test_tie_keeps_current(self):
        observed = constant_speed(0.0, 10.0, 5)
        candidates = {lam: constant_speed(0.0, 10.0, 6) for lam in GRID}
        dc = update_lambda(DriverCharacteristic(lambda_=0.7, grid=GRID), candidates, observed)
        assert dc.lambda_ == 0.7

    def test_equidistant_tie_takes_smaller(self):
        grid = (0.25, 0.5, 0.75)
        observed = constant_speed(0.0, 10.0, 5)
        candidates = {
            0.25: constant_speed(0.0, 10.0, 6),
            0.5: constant_speed(0.0, 12.0, 6),
            0.75: constant_speed(0.0, 10.0, 6),
        }
        dc = update_lambda(DriverCharacteristic(lambda_=0.5, grid=grid), candidates, observed)
        assert dc.lambda_ == 0.25

    def test_missing_candidate(self):
        observed = constant_speed(0.0, 10.0, 5)
        candidates = {0.3: constant_speed(0.0, 10.0, 6)}
        with pytest.raises(ShapeException):
            update_lambda(DriverCharacteristic(lambda_=0.5, grid=GRID), candidates, observed)

    def test_observed_longer_than_prediction(self):
        observed = constant_speed(0.0, 10.0, 8)
        candidates = {lam: constant_speed(0.0, 10.0, 6) for lam in GRID}
        with pytest.raises(ShapeException):
            update_lambda(DriverCharacteristic(lambda_=0.5, grid=GRID), candidates, observed)


class TestBaseline:
    def test_holds_speed_and_heading(self):
        state = TrajectoryPoint(t=1.0, x=10.0, y=0.0, v=8.0)
        baseline = constant_velocity_baseline(state, horizon=4)
        assert len(baseline) == 5
        assert baseline.x[-1] == pytest.approx(13.2)
        assert list(baseline.v) == [8.0] * 5


class TestRollingPredict:
    def test_cycle_cadence(self, cruise, free_env, toy_bn, unit_irl, online):
        log = rolling_predict(cruise, free_env, toy_bn, unit_irl, online, "cruise")
        assert log.vehicle_id == "cruise"
        assert [cycle.t for cycle in log.cycles] == pytest.approx(
            [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5]
        )
        for cycle in log.cycles:
            assert cycle.lambda_ in GRID
            assert len(cycle.prediction) == online.optimizer.horizon + 1
            assert cycle.ed_baseline == pytest.approx(0.0, abs=1e-9)
            assert cycle.ed_realized is not None
            assert not cycle.fallback

    def test_first_cycle_uses_initial_lambda(self, cruise, free_env, toy_bn, unit_irl, online):
        log = rolling_predict(cruise, free_env, toy_bn, unit_irl, online)
        assert log.cycles[0].lambda_ == online.initial_lambda

    def test_stops_after_crossing_stop_bar(self, free_env, toy_bn, unit_irl, online):
        stream = constant_speed(90.0, 10.0, 30)
        log = rolling_predict(stream, free_env, toy_bn, unit_irl, online)
        assert [cycle.t for cycle in log.cycles] == pytest.approx([0.0, 0.5, 1.0])

    def test_ignores_samples_before_yellow(self, free_env, toy_bn, unit_irl, online):
        stream = constant_speed(40.0, 10.0, 20, t0=-1.0)
        log = rolling_predict(stream, free_env, toy_bn, unit_irl, online)
        assert log.cycles[0].t == pytest.approx(0.0)

    def test_causal(self, cruise, free_env, toy_bn, unit_irl, online):
        points = list(cruise.points[:21])
        for i in range(21, 40):
            points.append(TrajectoryPoint(t=0.1 * i, x=70.0 + 0.8 * (i - 20), y=0.0, v=8.0))
        altered = Trajectory(points)
        first = rolling_predict(cruise, free_env, toy_bn, unit_irl, online)
        second = rolling_predict(altered, free_env, toy_bn, unit_irl, online)
        early = [cycle for cycle in first.cycles if cycle.t <= 2.0 + 1e-9]
        assert len(early) == 5
        for a, b in zip(early, second.cycles):
            assert a.prediction == b.prediction
            assert a.lambda_ == b.lambda_
            assert a.posterior == b.posterior

    def test_single_lambda_matches_offline_optimizer(
        self, cruise, free_env, toy_bn, unit_irl, online
    ):
        cfg = OnlineConfig(
            lambda_grid=(0.5,), optimizer=online.optimizer, scheduler="synchronous"
        )
        log = rolling_predict(cruise, free_env, toy_bn, unit_irl, cfg)
        for cycle in log.cycles[:3]:
            point = cruise[cruise.index_at(cycle.t)]
            expected = optimize_trajectory(
                unit_irl.weights(cycle.maneuver),
                free_env,
                point,
                cfg.optimizer,
                unit_irl.scaling(cycle.maneuver),
            )
            assert cycle.prediction == expected.trajectory

    def test_samples_must_increase(self, free_env, toy_bn, unit_irl, online):
        predictor = RollingPredictor(free_env, toy_bn, unit_irl, online)
        predictor.observe(TrajectoryPoint(t=0.0, x=40.0, y=0.0, v=10.0))
        with pytest.raises(ShapeException):
            predictor.observe(TrajectoryPoint(t=0.0, x=41.0, y=0.0, v=10.0))

    def test_log_round_trip(self, tmp_path, cruise, free_env, toy_bn, unit_irl, online):
        log = rolling_predict(cruise, free_env, toy_bn, unit_irl, online, "v-1")
        path = tmp_path / "predictions.jsonl"
        write_prediction_logs(path, [log])
        [loaded] = read_prediction_logs(path)
        assert loaded.vehicle_id == "v-1"
        assert len(loaded.cycles) == len(log.cycles)
        for original, restored in zip(log.cycles, loaded.cycles):
            assert restored.maneuver is original.maneuver
            assert restored.lambda_ == original.lambda_
            assert restored.posterior == original.posterior
            assert restored.controls == original.controls
            assert list(restored.prediction.x) == list(original.prediction.x)
            assert list(restored.baseline.v) == list(original.baseline.v)
            assert restored.ed_realized == original.ed_realized

    def test_pass_when_network_says_pass(self, free_env, toy_bn, unit_irl, online):
        # fast and close to the bar, like the passing toy approaches
        stream = constant_speed(80.0, 10.0, 15)
        log = rolling_predict(stream, free_env, toy_bn, unit_irl, online)
        assert log.cycles[0].maneuver is Intention.PASS
