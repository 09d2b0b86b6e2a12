from pathlib import Path

import numpy as np
import pytest

from yellowlight import Intention
from yellowlight.core import EnvironmentState, Trajectory, TrajectoryPoint
from yellowlight.features import FeatureScaling, WeightVector
from yellowlight.irl import IrlModel
from yellowlight.scenario import ScenarioRecord

TEST_DIR = Path(__file__).parent


def pytest_addoption(parser):
    parser.addoption(
        "--integration",
        action="store_true",
        help="Run integration tests",
    )


def constant_speed(
    x0: float, v: float, count: int, t0: float = 0.0, dt: float = 0.1, a: float = 0.0
):
    """Constant-speed samples; `a` only fills the recorded acceleration."""
    return Trajectory(
        [
            TrajectoryPoint(t=t0 + i * dt, x=x0 + v * i * dt, y=0.0, v=v, a=a)
            for i in range(count)
        ],
        dt=dt,
    )


@pytest.fixture
def free_env():
    """Yellow at t=0 with no front vehicle; the queue never launches within a test."""
    return EnvironmentState(
        yellow_onset=0.0,
        yellow_duration=3.5,
        stop_bar_x=100.0,
        v_lim=15.0,
        x_queue=95.0,
        i_launch=335,
    )


@pytest.fixture
def front_env():
    front = constant_speed(x0=80.0, v=10.0, count=100)
    return EnvironmentState(
        yellow_onset=0.0,
        yellow_duration=3.5,
        stop_bar_x=100.0,
        v_lim=15.0,
        x_queue=95.0,
        i_launch=335,
        fv_trajectory=front,
    )


@pytest.fixture
def cruise():
    """40 samples at 10 m/s from x=50, t=0..3.9."""
    return constant_speed(x0=50.0, v=10.0, count=40)


@pytest.fixture
def unit_irl():
    return IrlModel(
        theta_pass=WeightVector.ones(Intention.PASS),
        theta_stop=WeightVector.ones(Intention.STOP),
        scaling_pass=FeatureScaling(Intention.PASS, (0.1, 1.0, 1.0, 100.0, 100.0)),
        scaling_stop=FeatureScaling(Intention.STOP, (1.0, 1.0, 100.0, 100.0, 0.0025)),
    )


@pytest.fixture
def toy_records(front_env):
    """Pass and stop approaches separable on every evidence variable but elapsed time."""
    records = []
    for i, v in enumerate(np.linspace(9.0, 14.0, 6)):
        passing = constant_speed(x0=100.0 - 2.0 * v, v=float(v), count=45, a=0.1 * (i + 1))
        records.append(
            ScenarioRecord(
                vehicle_id=f"pass-{i}",
                trajectory=passing,
                env=front_env,
                intention=Intention.PASS,
            )
        )
        slow = float(v) / 4
        stopping = constant_speed(x0=20.0, v=slow, count=45, a=-1.0 - 0.1 * i)
        records.append(
            ScenarioRecord(
                vehicle_id=f"stop-{i}",
                trajectory=stopping,
                env=front_env,
                intention=Intention.STOP,
            )
        )
    return records
