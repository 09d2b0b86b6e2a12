import json

import attr
import pandas as pd
import pytest

from yellowlight import Intention
from yellowlight.core import ControlSequence, rollout
from yellowlight.errors import EmptyEvaluationException
from yellowlight.evaluation import (
    DECILES,
    PROFILE_COLUMNS,
    TRACE_COLUMNS,
    ConfusionCounts,
    EvaluationReport,
    accuracy_by_decile,
    evaluate_intention,
    evaluate_trajectory,
    intention_trace,
    summarize_intention,
    trajectory_profiles,
    write_frame,
)
from yellowlight.intention import IntentionPosterior, fit_bn, intention_dataset
from yellowlight.online import CycleRecord, PredictionLog, constant_velocity_baseline
from yellowlight.scenario import ScenarioRecord

from .conftest import constant_speed


@pytest.fixture
def toy_bn(toy_records):
    return fit_bn(intention_dataset(toy_records), k=2)


@pytest.fixture
def cruise_record(cruise, free_env):
    return ScenarioRecord(
        vehicle_id="cruise", trajectory=cruise, env=free_env, intention=Intention.STOP
    )


def cycle_at(trajectory, index, a=0.0):
    """A cycle predicting constant acceleration `a` from sample `index`."""
    point = trajectory[index]
    controls = ControlSequence(a=[a] * 5, psi=[0.0] * 5)
    return CycleRecord(
        t=point.t,
        posterior=IntentionPosterior(0.2, 0.8),
        maneuver=Intention.STOP,
        lambda_=0.5,
        prediction=rollout(point, controls),
        controls=controls,
        baseline=constant_velocity_baseline(point, 5),
    )


class TestConfusion:
    def test_counts(self):
        counts = ConfusionCounts.from_labels(
            ["pass", "pass", "stop", "stop", "stop"], ["pass", "stop", "stop", "pass", "stop"]
        )
        assert counts == ConfusionCounts(true_pass=1, false_pass=1, true_stop=2, false_stop=1)
        assert counts.total == 5
        assert counts.accuracy == pytest.approx(0.6)
        assert ConfusionCounts().accuracy is None


class TestIntention:
    def test_trace(self, toy_bn, toy_records):
        trace = intention_trace(toy_bn, toy_records)
        assert list(trace.columns) == TRACE_COLUMNS
        assert len(trace) == 36 * len(toy_records)
        assert (trace["p_pass"] + trace["p_stop"]).round(12).eq(1.0).all()

    def test_separable_toy_data(self, toy_bn, toy_records):
        report = evaluate_intention(toy_bn, toy_records)
        assert report.accuracy == 1.0
        assert report.vehicles == len(toy_records)
        assert report.confusion.total == report.points
        assert report.naive_confusion.total == report.points
        assert len(report.by_decile) == DECILES
        assert sum(d.points for d in report.by_decile) == report.points

    def test_deciles(self):
        trace = pd.DataFrame(
            {
                "elapsed_yellow": [0.0, 0.5, 3.4, 3.5],
                "remaining_yellow": [3.5, 3.0, 0.1, 0.0],
                "predicted": ["stop", "pass", "pass", "pass"],
                "naive": ["stop", "stop", "stop", "pass"],
                "label": ["stop", "pass", "stop", "pass"],
            }
        )
        table = accuracy_by_decile(trace)
        assert list(table["decile"]) == list(range(DECILES))
        assert list(table["points"]) == [1, 1, 0, 0, 0, 0, 0, 0, 0, 2]
        assert table.loc[9, "accuracy"] == 0.5
        assert table.loc[9, "naive_accuracy"] == 1.0
        assert pd.isna(table.loc[5, "accuracy"])
        assert table.loc[0, "lower"] == 0.0
        assert table.loc[9, "upper"] == 1.0

    def test_nothing_to_score(self, toy_bn, toy_records):
        late = [attr.evolve(r, trajectory=r.trajectory.shift_time(10.0)) for r in toy_records]
        with pytest.raises(EmptyEvaluationException):
            summarize_intention(intention_trace(toy_bn, late))


class TestTrajectory:
    def test_perfect_prediction(self, cruise, cruise_record):
        log = PredictionLog("cruise", [cycle_at(cruise, 0), cycle_at(cruise, 5)])
        report = evaluate_trajectory([log], [cruise_record])
        assert report.cycles == 2
        assert report.mean_ed == pytest.approx(0.0, abs=1e-9)
        assert report.baseline_mean_ed == pytest.approx(0.0, abs=1e-9)
        assert report.mean_ed_by_maneuver["pass"] is None
        assert report.infeasible_cycles == 0

    def test_model_against_baseline(self, cruise, cruise_record):
        log = PredictionLog("cruise", [cycle_at(cruise, 0, a=-1.0)])
        report = evaluate_trajectory([log], [cruise_record])
        assert report.mean_ed > report.baseline_mean_ed
        assert report.win_rate == 0.0
        assert report.mean_ed_by_maneuver["stop"] == report.mean_ed

    def test_skips_cycles_without_truth(self, cruise, cruise_record):
        log = PredictionLog("cruise", [cycle_at(cruise, 39)])
        stranger = PredictionLog("someone", [cycle_at(cruise, 0)])
        report = evaluate_trajectory([log, stranger], [cruise_record])
        assert report.cycles == 0
        assert report.skipped_cycles == 2
        assert report.mean_ed is None

    def test_order_does_not_matter(self, cruise, cruise_record, free_env):
        other = ScenarioRecord(
            vehicle_id="other",
            trajectory=constant_speed(20.0, 12.0, 40),
            env=free_env,
            intention=Intention.PASS,
        )
        logs = [
            PredictionLog("cruise", [cycle_at(cruise, 0, a=0.5), cycle_at(cruise, 10, a=-0.5)]),
            PredictionLog("other", [cycle_at(other.trajectory, 3, a=1.0)]),
        ]
        forward = evaluate_trajectory(logs, [cruise_record, other])
        backward = evaluate_trajectory(logs[::-1], [other, cruise_record])
        assert forward == backward
        assert forward.vehicles == 2

    def test_profiles(self, cruise, cruise_record, tmp_path):
        log = PredictionLog("cruise", [cycle_at(cruise, 0)])
        profiles = trajectory_profiles([log], [cruise_record])
        assert list(profiles.columns) == PROFILE_COLUMNS
        assert set(profiles["kind"]) == {"prediction", "baseline", "truth"}
        assert (profiles["kind"] == "truth").sum() == 6
        path = tmp_path / "profiles.csv"
        write_frame(path, profiles)
        assert len(pd.read_csv(path)) == len(profiles)


class TestReport:
    def test_json(self, cruise, cruise_record, tmp_path):
        log = PredictionLog("cruise", [cycle_at(cruise, 39)])
        report = EvaluationReport(trajectory=evaluate_trajectory([log], [cruise_record]))
        path = tmp_path / "report.json"
        report.write(path)
        written = json.loads(path.read_text())
        assert written["intention"] is None
        assert written["trajectory"]["mean_ed"] is None
        assert written["trajectory"]["skipped_cycles"] == 1

    def test_empty_deciles_are_null(self):
        report = EvaluationReport(
            trajectory=None,
            intention=summarize_intention(
                pd.DataFrame(
                    {
                        "vehicle_id": ["a"],
                        "elapsed_yellow": [0.0],
                        "remaining_yellow": [1.0],
                        "predicted": ["stop"],
                        "naive": ["stop"],
                        "label": ["stop"],
                    }
                )
            ),
        )
        d = report.to_dict()
        assert d["intention"]["accuracy"] == 1.0
        assert d["intention"]["by_decile"][3]["accuracy"] is None
