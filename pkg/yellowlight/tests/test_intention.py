import json

import attr
import jsonschema
import numpy as np
import pytest

from yellowlight import Intention
from yellowlight.core import EnvironmentState, TrajectoryPoint
from yellowlight.errors import (
    CoverageException,
    DegenerateDataException,
    InvalidEvidenceException,
    ParameterException,
    PhaseException,
    ShapeException,
)
from yellowlight.intention import (
    EVIDENCE_VARIABLES,
    BnModel,
    IntentionEvidence,
    IntentionPosterior,
    build_evidence,
    discretize,
    fit_bn,
    infer_intention,
    intention_dataset,
    intention_samples,
    label_trajectory,
    max_travel_distance,
    naive_intention,
)

from .conftest import TEST_DIR, constant_speed


@pytest.fixture
def toy_bn(toy_records):
    return fit_bn(intention_dataset(toy_records), k=2)


class TestEvidence:
    def test_build_evidence(self, front_env):
        point = TrajectoryPoint(t=1.0, x=70.0, y=0.0, v=12.0, a=-0.5)
        evidence = build_evidence(point, front_env)
        assert evidence.elapsed_yellow == 1.0
        assert evidence.tti == pytest.approx(2.5)
        assert evidence.rel_speed == pytest.approx(2.0)
        assert evidence.lon_speed == 12.0
        assert evidence.lon_accel == -0.5

    def test_standing_vehicle_caps_tti(self, free_env):
        evidence = build_evidence(TrajectoryPoint(t=0.0, x=0.0, y=0.0, v=0.0), free_env)
        assert evidence.tti == 30.0
        assert evidence.rel_speed == 0.0

    def test_non_finite(self):
        with pytest.raises(InvalidEvidenceException):
            IntentionEvidence(
                elapsed_yellow=0.0, tti=float("inf"), rel_speed=0.0, lon_speed=1.0, lon_accel=0.0
            )

    def test_discretize(self):
        assert discretize(-5.0, [0.0, 1.0]) == 0
        assert discretize(0.0, [0.0, 1.0]) == 1
        assert discretize(7.0, [0.0, 1.0]) == 2
        with pytest.raises(InvalidEvidenceException):
            discretize(float("nan"), [0.0])


class TestPosterior:
    def test_tie_is_stop(self):
        assert IntentionPosterior(0.5, 0.5).maneuver is Intention.STOP
        assert IntentionPosterior(0.6, 0.4).maneuver is Intention.PASS

    def test_must_sum_to_one(self):
        with pytest.raises(ParameterException):
            IntentionPosterior(0.6, 0.6)


class TestFitAndInfer:
    def test_separable_data(self, toy_bn, toy_records):
        for record in toy_records:
            for evidence, label in intention_samples(
                record.trajectory, record.env, record.intention
            ):
                posterior = infer_intention(toy_bn, evidence)
                assert posterior.maneuver is label
                assert posterior.p_pass + posterior.p_stop == pytest.approx(1.0)

    def test_table_shapes(self, toy_bn):
        assert len(toy_bn.cpt_intention) == 8
        assert set(toy_bn.cpt_de) == {"lon_speed", "lon_accel"}
        for rows in toy_bn.cpt_de.values():
            assert all(sum(row) == pytest.approx(1.0) for row in rows)

    def test_bins(self, toy_bn):
        evidence = IntentionEvidence(
            elapsed_yellow=1e6, tti=-1e6, rel_speed=0.0, lon_speed=1e6, lon_accel=-1e6
        )
        bins = toy_bn.bins(evidence)
        assert len(bins) == 5
        assert bins[0] == 1 and bins[1] == 0
        assert bins[3] == 1 and bins[4] == 0

    def test_unseen_rows_are_uniform(self, toy_bn):
        assert any(row == (0.5, 0.5) for row in toy_bn.cpt_intention)

    def test_single_label(self, toy_records):
        samples = intention_dataset(r for r in toy_records if r.intention is Intention.PASS)
        with pytest.raises(DegenerateDataException):
            fit_bn(samples, k=2)

    def test_too_few_distinct_values(self, toy_records):
        with pytest.raises(DegenerateDataException):
            fit_bn(intention_dataset(toy_records), k=50)

    def test_bad_parameters(self, toy_records):
        samples = intention_dataset(toy_records)
        with pytest.raises(ParameterException):
            fit_bn(samples, k=1)
        with pytest.raises(ParameterException):
            fit_bn(samples, k=2, alpha=0.0)
        with pytest.raises(ParameterException):
            fit_bn([], k=2)

    def test_json_round_trip(self, toy_bn):
        text = toy_bn.to_json()
        schema = json.loads((TEST_DIR / "data" / "bn_model.schema.json").read_text())
        jsonschema.validate(json.loads(text), schema)
        assert BnModel.from_json(text) == toy_bn

    def test_rejects_wrong_table_size(self, toy_bn):
        d = toy_bn.to_dict()
        d["cpt_intention"] = d["cpt_intention"][:-1]
        with pytest.raises(ShapeException):
            BnModel.from_dict(d)


# (elapsed_yellow, tti, rel_speed, lon_speed, lon_accel) bins, intention, copies; every variable
# is 1 in exactly 20 of the 40 samples so the two-bin edges all sit at 0.5
HAND_COUNTED = [
    ((0, 0, 0, 1, 1), Intention.PASS, 10),
    ((0, 0, 0, 1, 1), Intention.STOP, 2),
    ((1, 1, 1, 0, 0), Intention.STOP, 10),
    ((1, 1, 1, 0, 0), Intention.PASS, 2),
    ((0, 1, 0, 1, 0), Intention.PASS, 6),
    ((1, 0, 1, 0, 1), Intention.STOP, 6),
    ((0, 0, 1, 0, 1), Intention.PASS, 2),
    ((1, 1, 0, 1, 0), Intention.STOP, 2),
]


def evidence_of(values):
    return IntentionEvidence(**dict(zip(EVIDENCE_VARIABLES, (float(v) for v in values))))


@pytest.fixture
def hand_counted():
    samples = [
        (evidence_of(values), label)
        for values, label, copies in HAND_COUNTED
        for _ in range(copies)
    ]
    assert len(samples) == 40
    return samples


class TestHandCountedTables:
    def test_edges(self, hand_counted):
        model = fit_bn(hand_counted, k=2, alpha=1.0)
        assert all(edges == (0.5,) for edges in model.bin_edges.values())

    def test_intention_table(self, hand_counted):
        model = fit_bn(hand_counted, k=2, alpha=1.0)
        # rows are indexed by (elapsed_yellow, tti, rel_speed) bins; (count + 1) / (total + 2)
        expected = {
            0: (11 / 14, 3 / 14),
            1: (3 / 4, 1 / 4),
            2: (7 / 8, 1 / 8),
            3: (1 / 2, 1 / 2),
            4: (1 / 2, 1 / 2),
            5: (1 / 8, 7 / 8),
            6: (1 / 4, 3 / 4),
            7: (3 / 14, 11 / 14),
        }
        for row, (p_pass, p_stop) in expected.items():
            assert model.cpt_intention[row] == pytest.approx((p_pass, p_stop), abs=1e-12)

    def test_diagnostic_tables(self, hand_counted):
        model = fit_bn(hand_counted, k=2, alpha=1.0)
        # 20 samples per intention over two bins: (count + 1) / 22
        speed = model.cpt_de["lon_speed"]
        accel = model.cpt_de["lon_accel"]
        assert speed[Intention.PASS.index] == pytest.approx((5 / 22, 17 / 22), abs=1e-12)
        assert speed[Intention.STOP.index] == pytest.approx((17 / 22, 5 / 22), abs=1e-12)
        assert accel[Intention.PASS.index] == pytest.approx((9 / 22, 13 / 22), abs=1e-12)
        assert accel[Intention.STOP.index] == pytest.approx((13 / 22, 9 / 22), abs=1e-12)

    def test_posterior(self, hand_counted):
        model = fit_bn(hand_counted, k=2, alpha=1.0)
        posterior = infer_intention(model, evidence_of((0, 0, 0, 1, 1)))
        weight_pass = 11 / 14 * 17 / 22 * 13 / 22
        weight_stop = 3 / 14 * 5 / 22 * 9 / 22
        assert posterior.p_pass == pytest.approx(
            weight_pass / (weight_pass + weight_stop), abs=1e-12
        )

    def test_deterministic(self, hand_counted):
        assert fit_bn(hand_counted, k=2).to_json() == fit_bn(list(hand_counted), k=2).to_json()


def bin_representatives(edges):
    """One value inside every bin delimited by `edges`."""
    inner = [(low + high) / 2 for low, high in zip(edges, edges[1:])]
    return [edges[0] - 1.0, *inner, edges[-1] + 1.0]


class TestPosteriorProperties:
    @pytest.fixture
    def random_samples(self):
        rng = np.random.default_rng(11)
        samples = []
        for _ in range(400):
            values = rng.normal(0.0, 1.0, 5)
            label = Intention.PASS if values[3] - values[4] + rng.normal() > 0 else Intention.STOP
            samples.append((evidence_of(values), label))
        return samples

    def test_deterministic(self, random_samples):
        assert fit_bn(random_samples, k=3).to_json() == fit_bn(random_samples, k=3).to_json()

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("name", ["lon_speed", "lon_accel"])
    def test_monotone_in_likelihood_ratio(self, random_samples, seed, name):
        model = fit_bn(random_samples, k=3)
        table = model.cpt_de[name]
        ratio = [p / s for p, s in zip(table[Intention.PASS.index], table[Intention.STOP.index])]
        values = bin_representatives(model.bin_edges[name])
        base = evidence_of(np.random.default_rng(seed).normal(0.0, 1.0, 5))

        p_pass = [
            infer_intention(model, attr.evolve(base, **{name: values[b]})).p_pass
            for b in sorted(range(model.k_bins), key=lambda b: ratio[b])
        ]
        assert all(later >= earlier - 1e-12 for earlier, later in zip(p_pass, p_pass[1:]))
        assert p_pass[-1] > p_pass[0]


class TestLabels:
    def test_label_by_position_at_yellow_end(self, free_env):
        # yellow ends at t=3.5 with the stop bar at 100
        assert label_trajectory(constant_speed(63.0, 10.0, 40), free_env) is Intention.PASS
        assert label_trajectory(constant_speed(50.0, 10.0, 40), free_env) is Intention.STOP

    def test_trajectory_must_cover_yellow_end(self, free_env):
        with pytest.raises(CoverageException):
            label_trajectory(constant_speed(0.0, 10.0, 10), free_env)

    def test_samples_only_in_yellow(self, free_env):
        trajectory = constant_speed(0.0, 10.0, 60, t0=-1.0)
        samples = intention_samples(trajectory, free_env, Intention.STOP)
        assert len(samples) == 36
        assert all(label is Intention.STOP for _, label in samples)


class TestNaive:
    def make_env(self, x_bar):
        return EnvironmentState(
            yellow_onset=0.0,
            yellow_duration=2.0,
            stop_bar_x=x_bar,
            v_lim=12.0,
            x_queue=x_bar - 5.0,
            i_launch=300,
            a_max_naive=2.0,
        )

    def test_reach(self):
        assert max_travel_distance(10.0, 2.0, 12.0, 2.0) == pytest.approx(23.0)
        assert max_travel_distance(13.0, 2.0, 12.0, 2.0) == pytest.approx(26.0)
        assert max_travel_distance(10.0, 2.0, 30.0, 2.0) == pytest.approx(24.0)

    def test_decision(self):
        point = TrajectoryPoint(t=0.0, x=0.0, y=0.0, v=10.0)
        assert naive_intention(point, self.make_env(25.0)) is Intention.STOP
        assert naive_intention(point, self.make_env(22.0)) is Intention.PASS

    def test_outside_yellow(self):
        point = TrajectoryPoint(t=5.0, x=0.0, y=0.0, v=10.0)
        with pytest.raises(PhaseException):
            naive_intention(point, self.make_env(25.0))
