import functools
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import attr
import click

from . import Intention
from .config import PredictorConfiguration, load_configuration
from .errors import IngestionException, ValidationException, YellowLightException
from .evaluation import (
    EvaluationReport,
    accuracy_by_decile,
    evaluate_trajectory,
    intention_trace,
    summarize_intention,
    trajectory_profiles,
    write_frame,
)
from .intention import BnModel, fit_bn, intention_dataset
from .irl import IrlModel, demonstrations_from_records, train_maxent_irl
from .logging.jsonl_log_handler import JsonLinesLogHandler
from .online import PredictionLog, read_prediction_logs, rolling_predict, write_prediction_logs
from .oracle import run_oracles
from .scenario import ScenarioRecord, load_dataset, standard_datasets, write_dataset
from .util import atomic_write, compute_ordered, default_scheduler

EXIT_VALIDATION = 2
EXIT_INGESTION = 3
EXIT_NOT_CONVERGED = 4

BN_MODEL = "bn_model.json"
IRL_MODEL = "irl_model.json"
PREDICTIONS = "predictions.jsonl"
REPORT = "report.json"
ORACLE_REPORT = "oracle.json"


def setup_logger(log_file=None, capacity=50):
    logging.basicConfig(
        level=logging.INFO,
        format="%(levelname)s:%(asctime)s:%(name)s:%(message)s",
    )
    logger = logging.getLogger()

    if log_file:
        file_handler = JsonLinesLogHandler(log_file, capacity)
        file_handler.setLevel(logging.WARNING)
        logger.addHandler(file_handler)


logger = logging.getLogger(__name__)


@click.group()
@click.option(
    "--log_file",
    "--log-file",
    type=click.Path(dir_okay=False),
    help="Append warnings and errors to this JSON-lines file",
)
def cli(log_file):
    setup_logger(log_file)


seed_option = click.option("--seed", type=int, default=0, show_default=True, help="Random seed")
config_option = click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    help="TOML file overriding the packaged defaults",
)
out_option = click.option(
    "--out",
    type=click.Path(file_okay=False),
    default=".",
    show_default=True,
    help="Directory to write results to",
)
data_option = click.option(
    "--data",
    type=click.Path(exists=True),
    required=True,
    help="Scenario JSON file or a directory of them",
)
bn_option = click.option(
    "--bn",
    "bn_path",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Intention model written by train-bn",
)


def handle_errors(func):
    """Map validation and ingestion failures to their exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except IngestionException as e:
            logger.error("Could not read input: %s", e)
            sys.exit(EXIT_INGESTION)
        except ValidationException as e:
            logger.error("Invalid input: %s", e)
            sys.exit(EXIT_VALIDATION)

    return wrapper


def _configuration(config_file: Optional[str], seed: int) -> PredictorConfiguration:
    return load_configuration(config_file, seed=seed, scheduler=default_scheduler())


def _read_model(path, cls):
    try:
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
    except YellowLightException:
        raise
    except Exception as e:
        raise IngestionException(path, f"Not a valid {cls.__name__}: {e}") from e


def _write_text(path: Path, text: str) -> None:
    with atomic_write(path) as f:
        f.write(text)
    logger.info("Wrote %s", path)


@cli.command()
@seed_option
@config_option
@out_option
@handle_errors
def simulate(seed, config_file, out):
    """Generates synthetic training, test and intention datasets."""
    config = _configuration(config_file, seed)
    datasets = standard_datasets(config.simulation.plan, seed, config.online.lambda_grid)
    for name, records in datasets.items():
        write_dataset(Path(out) / name, records)
    sys.exit(0)


@cli.command("train-bn")
@data_option
@seed_option
@config_option
@out_option
@handle_errors
def train_bn(data, seed, config_file, out):
    """Fits the intention network to labeled scenarios."""
    config = _configuration(config_file, seed)
    records = load_dataset(data, config.optimizer.tau, config.bn.d_label)
    samples = intention_dataset(records, config.bn.d_label)
    model = fit_bn(samples, config.bn.k_bins, config.bn.alpha)
    _write_text(Path(out) / BN_MODEL, model.to_json())
    sys.exit(0)


@cli.command("train-irl")
@data_option
@seed_option
@config_option
@out_option
@handle_errors
def train_irl(data, seed, config_file, out):
    """Learns pass and stop cost weights from demonstrated trajectories."""
    config = _configuration(config_file, seed)
    records = load_dataset(data, config.optimizer.tau, config.bn.d_label)
    results = {}
    for maneuver in Intention:
        demos = demonstrations_from_records(
            records, maneuver, config.optimizer.horizon, config.demo_stride
        )
        logger.info("Training %s weights on %d demonstrations", maneuver.value, len(demos))
        results[maneuver] = train_maxent_irl(demos, maneuver, config.train)

    model = IrlModel.from_results(results[Intention.PASS], results[Intention.STOP])
    _write_text(Path(out) / IRL_MODEL, model.to_json())
    converged = all(result.summary.converged for result in results.values())
    sys.exit(0 if converged else EXIT_NOT_CONVERGED)


@cli.command()
@data_option
@bn_option
@click.option(
    "--irl",
    "irl_path",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Cost model written by train-irl",
)
@seed_option
@config_option
@out_option
@handle_errors
def predict(data, bn_path, irl_path, seed, config_file, out):
    """Runs the rolling-horizon predictor over every scenario."""
    config = _configuration(config_file, seed)
    records = load_dataset(data, config.optimizer.tau, config.bn.d_label)
    bn = _read_model(bn_path, BnModel)
    irl = _read_model(irl_path, IrlModel)
    # records fan out; each record's own candidates run in line
    online = attr.evolve(config.online, scheduler="synchronous")

    def run(record: ScenarioRecord) -> Optional[PredictionLog]:
        try:
            return rolling_predict(
                record.trajectory, record.env, bn, irl, online, record.vehicle_id
            )
        except YellowLightException as e:
            logger.exception(str(e), exc_info=e, extra={"vehicle": record.vehicle_id})
            return None

    results = compute_ordered(run, records, default_scheduler())
    logs: List[PredictionLog] = [log for log in results if log is not None]
    write_prediction_logs(Path(out) / PREDICTIONS, logs)
    failed = len(results) - len(logs)
    if failed:
        logger.warning("Prediction failed for %d of %d scenarios", failed, len(results))
    sys.exit(0 if not failed else EXIT_VALIDATION)


@cli.command()
@data_option
@bn_option
@click.option(
    "--predictions",
    type=click.Path(exists=True, dir_okay=False),
    help="Prediction log written by predict; scores trajectories when given",
)
@seed_option
@config_option
@out_option
@handle_errors
def evaluate(data, bn_path, predictions, seed, config_file, out):
    """Scores intention and trajectory predictions against the scenarios."""
    config = _configuration(config_file, seed)
    records = load_dataset(data, config.optimizer.tau, config.bn.d_label)
    bn = _read_model(bn_path, BnModel)
    out = Path(out)

    trace = intention_trace(bn, records, config.bn.d_label)
    report = EvaluationReport(intention=summarize_intention(trace))
    if config.evaluation.trace:
        write_frame(out / "intention_trace.csv", trace)
        write_frame(out / "accuracy_by_decile.csv", accuracy_by_decile(trace))

    if predictions:
        try:
            logs = read_prediction_logs(predictions)
        except (OSError, ValueError, KeyError) as e:
            raise IngestionException(predictions, str(e)) from e
        report.trajectory = evaluate_trajectory(logs, records)
        if config.evaluation.profiles:
            write_frame(out / "trajectory_profiles.csv", trajectory_profiles(logs, records))

    report.write(out / REPORT)
    logger.info("Wrote %s", out / REPORT)
    sys.exit(0)


@cli.command()
@seed_option
@config_option
@out_option
@handle_errors
def oracle(seed, config_file, out):
    """Checks exact computations against brute force on small instances."""
    config = _configuration(config_file, seed)
    results = run_oracles(seed, config.optimizer.bounds)
    for result in results:
        click.echo(str(result))
    _write_text(
        Path(out) / ORACLE_REPORT,
        json.dumps([attr.asdict(result) for result in results], indent=2),
    )
    sys.exit(0 if all(result.passed for result in results) else 1)
