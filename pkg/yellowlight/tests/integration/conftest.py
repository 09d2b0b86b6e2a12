import pytest

from yellowlight import Intention
from yellowlight.intention import fit_bn, intention_dataset
from yellowlight.irl import IrlModel, TrainConfig, demonstrations_from_records, train_maxent_irl
from yellowlight.scenario import DatasetPlan, standard_datasets
from yellowlight.trajopt import OptimizerConfig

SEED = 42


def pytest_runtest_setup(item):
    if "FLAKE8" in item.nodeid or "BLACK" in item.nodeid:
        return
    if not item.config.getoption("--integration", False):
        pytest.skip("Skipping integration test")


@pytest.fixture(scope="session")
def datasets():
    """The default training, test and intention sets."""
    return standard_datasets(DatasetPlan(), seed=SEED, scheduler="threads")


@pytest.fixture(scope="session")
def bn(datasets):
    return fit_bn(intention_dataset(datasets["intention"]))


@pytest.fixture(scope="session")
def optimizer():
    return OptimizerConfig()


@pytest.fixture(scope="session")
def irl(datasets, optimizer):
    cfg = TrainConfig(optimizer=optimizer, scheduler="threads")
    results = {
        maneuver: train_maxent_irl(
            demonstrations_from_records(datasets["train"], maneuver, optimizer.horizon),
            maneuver,
            cfg,
        )
        for maneuver in Intention
    }
    return IrlModel.from_results(results[Intention.PASS], results[Intention.STOP])
