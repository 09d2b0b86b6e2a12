"""
Synthetic yellow-light approaches.

A target vehicle drives toward a stop bar and the light turns yellow `lead_in` seconds into the
episode. Until then the target holds its approach speed, following a front vehicle if there is
one. At yellow onset the intent policy decides whether it passes or stops, and the driver model
turns that decision into controls. Both driver models rank their options with the reference
feature weights reweighted by the driver's lambda, which is what online lambda estimation
tries to recover.
"""

import enum
import json
import logging
import math
from os import PathLike
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import attr
import numpy as np

from . import Intention
from .core import (
    DEFAULT_TAU,
    TIME_TOLERANCE,
    ControlBounds,
    ControlSequence,
    EnvironmentState,
    Trajectory,
    TrajectoryPoint,
    kinematic_step,
    read_trajectories_csv,
    rollout,
    write_trajectories_csv,
)
from .errors import IngestionException, ParameterException, ValidationException
from .features import VEHICLE_LENGTH, FeatureScaling, WeightVector, apply_lambda
from .intention import DEFAULT_D_LABEL, label_trajectory
from .irl import IrlModel
from .online import DEFAULT_LAMBDA_GRID
from .trajopt import CostModel, OptimizerConfig, optimize_trajectory
from .util import atomic_write, compute_ordered

logger = logging.getLogger(__name__)

# car-following law
SPEED_GAIN = 0.5
GAP_GAIN = 0.2
SPEED_DIFFERENCE_GAIN = 0.6
TIME_HEADWAY = 1.5
JAM_GAP = 2.0

COMFORT_DECEL = 3.5
CRUISE_FV_GAP = 40.0
STOP_SPEED = 0.1
STOP_RADIUS = 1.0
# the optimal driver finishes a stop with the exact-stop law once braking gets this firm
HANDOFF_DECEL = 2.5
HANDOFF_DISTANCE = 2.0

PASS_ACCEL_LEVELS = 13
STOP_DECEL_LEVELS = 8

# preferences of the simulated drivers at lambda = 0.5
REFERENCE_MODEL = IrlModel(
    theta_pass=WeightVector.ones(Intention.PASS),
    theta_stop=WeightVector.ones(Intention.STOP),
    scaling_pass=FeatureScaling(Intention.PASS, (0.1, 1.0, 1.0, 100.0, 100.0)),
    scaling_stop=FeatureScaling(Intention.STOP, (1.0, 1.0, 100.0, 100.0, 0.0025)),
)


class IntentPolicy(enum.Enum):
    FORCE_PASS = "force_pass"
    FORCE_STOP = "force_stop"
    DILEMMA_ZONE = "dilemma_zone"


class FrontVehicleProfile(enum.Enum):
    NONE = "none"
    CRUISE = "cruise"
    BRAKE = "brake"


class DriverModel(enum.Enum):
    PLANNER = "planner"
    OPTIMAL = "optimal"


def _range(value) -> Tuple[float, float]:
    low, high = value
    return float(low), float(high)


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class ScenarioConfig:
    seed: int = 0
    approach_speed_range: Tuple[float, float] = attr.ib(default=(10.0, 15.0), converter=_range)
    initial_distance_range: Tuple[float, float] = attr.ib(default=(20.0, 70.0), converter=_range)
    yellow_duration: float = 3.5
    v_lim: float = 15.0
    stop_bar_x: float = 100.0
    lambda_star: float = 0.5
    intent_policy: IntentPolicy = attr.ib(default=IntentPolicy.DILEMMA_ZONE, converter=IntentPolicy)
    front_vehicle: FrontVehicleProfile = attr.ib(
        default=FrontVehicleProfile.NONE, converter=FrontVehicleProfile
    )
    driver: DriverModel = attr.ib(default=DriverModel.PLANNER, converter=DriverModel)
    lead_in: float = 1.0
    tail: float = 1.0
    max_duration: float = 20.0
    stop_margin: float = 5.0
    red_duration: float = 30.0
    a_max_naive: float = 2.0
    dilemma_slope: float = 2.0
    dilemma_offset: float = 0.5
    replan_interval: float = 0.5
    optimizer: OptimizerConfig = attr.Factory(OptimizerConfig)

    def __attrs_post_init__(self):
        for name in ("approach_speed_range", "initial_distance_range"):
            low, high = getattr(self, name)
            # equal bounds pin the value
            if not (0 < low <= high):
                raise ParameterException(name, "Expected 0 < low <= high.")
        if not 0.0 <= self.lambda_star <= 1.0:
            raise ParameterException("lambda_star", "Must lie in [0, 1].")
        for name in ("yellow_duration", "v_lim", "lead_in", "max_duration", "replan_interval"):
            if not getattr(self, name) > 0:
                raise ParameterException(name, "Must be positive.")
        if self.stop_margin < 0 or self.tail < 0 or self.red_duration < 0:
            raise ParameterException("timing", "Margins and durations must be non-negative.")
        if (
            self.intent_policy is IntentPolicy.FORCE_PASS
            and self.front_vehicle is FrontVehicleProfile.BRAKE
        ):
            raise ParameterException(
                "front_vehicle", "A forced pass cannot follow a front vehicle that stops."
            )

    @property
    def tau(self) -> float:
        return self.optimizer.tau

    @property
    def bounds(self) -> ControlBounds:
        return self.optimizer.bounds


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class ScenarioRecord:
    vehicle_id: str
    trajectory: Trajectory
    env: EnvironmentState
    intention: Intention
    lambda_star: Optional[float] = None
    seed: Optional[int] = None


def car_following_accel(
    v: float,
    v_desired: float,
    bounds: ControlBounds,
    gap: Optional[float] = None,
    v_front: Optional[float] = None,
) -> float:
    """Speed tracking, limited by time-headway keeping when a front vehicle is present."""
    accel = SPEED_GAIN * (v_desired - v)
    if gap is not None and v_front is not None:
        desired_gap = JAM_GAP + TIME_HEADWAY * v
        accel = min(accel, GAP_GAIN * (gap - desired_gap) + SPEED_DIFFERENCE_GAIN * (v_front - v))
    return float(np.clip(accel, bounds.a_min, bounds.a_max))


def stopping_decel(point: TrajectoryPoint, x_stop: float, tau: float) -> float:
    """Constant deceleration that brings the discrete model to rest at `x_stop`."""
    usable = x_stop - point.x - point.v * tau / 2
    if usable <= 0.01:
        return math.inf
    return point.v**2 / (2 * usable)


def _front_vehicle(
    cfg: ScenarioConfig, v0: float, x_onset: float, steps: int, onset_steps: int
) -> Tuple[Optional[Trajectory], float]:
    """Front-vehicle trajectory over the whole episode and the resulting queue position."""
    tau = cfg.tau
    x_queue = cfg.stop_bar_x - cfg.stop_margin
    if cfg.front_vehicle is FrontVehicleProfile.NONE:
        return None, x_queue

    if cfg.front_vehicle is FrontVehicleProfile.CRUISE:
        speed = v0 + 1.0
        x_start = x_onset + CRUISE_FV_GAP - speed * onset_steps * tau
        accel = np.zeros(steps)
    else:
        speed = v0
        gap = VEHICLE_LENGTH + JAM_GAP + TIME_HEADWAY * v0
        x_start = x_onset + gap - speed * onset_steps * tau
        fv_stop = cfg.stop_bar_x - cfg.stop_margin
        usable = fv_stop - (x_onset + gap) - speed * tau / 2
        decel = min(speed**2 / (2 * usable), -cfg.bounds.a_min)
        accel = np.where(np.arange(steps) >= onset_steps, -decel, 0.0)

    trajectory = rollout(
        TrajectoryPoint(t=0.0, x=x_start, y=0.0, v=speed),
        ControlSequence(a=accel, psi=np.zeros(steps), bounds=cfg.bounds),
        tau,
    )
    if cfg.front_vehicle is FrontVehicleProfile.BRAKE:
        x_queue = min(x_queue, trajectory.end.x - VEHICLE_LENGTH - JAM_GAP)
    return trajectory, x_queue


def _decide(cfg: ScenarioConfig, v0: float, distance: float, draw: float) -> Intention:
    if cfg.intent_policy is IntentPolicy.FORCE_PASS:
        return Intention.PASS
    if cfg.intent_policy is IntentPolicy.FORCE_STOP:
        return Intention.STOP
    if cfg.front_vehicle is FrontVehicleProfile.BRAKE:
        return Intention.STOP
    tti = distance / v0
    if tti > cfg.yellow_duration:
        return Intention.STOP
    # drivers who could make it at constant speed still stop more often the later they are
    lateness = cfg.dilemma_slope * (tti - cfg.yellow_duration) + cfg.dilemma_offset
    p_stop = 1.0 / (1.0 + math.exp(-lateness))
    return Intention.STOP if draw < p_stop else Intention.PASS


class _Episode:
    """Step-by-step target simulation that records the applied controls."""

    def __init__(self, cfg: ScenarioConfig, env: EnvironmentState, initial: TrajectoryPoint):
        self.cfg = cfg
        self.env = env
        self.initial = initial
        self.point = initial
        self.accel: List[float] = []
        self.heading: List[float] = []

    @property
    def steps(self) -> int:
        return len(self.accel)

    def step(self, a: float, psi: float = 0.0) -> None:
        bounds = self.cfg.bounds
        a = float(np.clip(a, bounds.a_min, bounds.a_max))
        psi = float(np.clip(psi, -bounds.psi_max, bounds.psi_max))
        self.point = kinematic_step(self.point, a, psi, self.cfg.tau)
        self.accel.append(a)
        self.heading.append(psi)

    def front(
        self, point: Optional[TrajectoryPoint] = None
    ) -> Tuple[Optional[float], Optional[float]]:
        point = point or self.point
        front = self.env.front_at([point.t])
        if front is None:
            return None, None
        return float(front[0][0]) - point.x - VEHICLE_LENGTH, float(front[1][0])

    def following(self, v_desired: float, point: Optional[TrajectoryPoint] = None) -> float:
        point = point or self.point
        gap, v_front = self.front(point)
        return car_following_accel(point.v, v_desired, self.cfg.bounds, gap, v_front)

    def trajectory(self) -> Trajectory:
        controls = ControlSequence(a=self.accel, psi=self.heading, bounds=self.cfg.bounds)
        return rollout(self.initial, controls, self.cfg.tau)


def _pass_law(episode: _Episode, point: TrajectoryPoint, accel: float) -> float:
    a = min(accel, (episode.env.v_lim - point.v) / episode.cfg.tau)
    if episode.env.fv_trajectory is not None:
        a = min(a, episode.following(episode.env.v_lim, point))
    return a


def _stop_law(
    episode: _Episode, point: TrajectoryPoint, decel: float, braking: bool
) -> Tuple[float, bool]:
    need = stopping_decel(point, episode.env.x_queue, episode.cfg.tau)
    if braking or need >= decel:
        if point.v <= 0:
            return 0.0, True
        return -min(need, -episode.cfg.bounds.a_min), True
    a = 0.0
    if episode.env.fv_trajectory is not None:
        a = min(a, episode.following(point.v, point))
    return a, False


def _simulate_plan(episode: _Episode, start: TrajectoryPoint, law, steps: int) -> List[float]:
    """Controls produced by a state-feedback law from `start` (psi held at zero)."""
    point, accel, state = start, [], None
    for _ in range(steps):
        a, state = law(point, state)
        a = float(np.clip(a, episode.cfg.bounds.a_min, episode.cfg.bounds.a_max))
        accel.append(a)
        point = kinematic_step(point, a, 0.0, episode.cfg.tau)
    return accel


def _plan_costs(
    episode: _Episode, start: TrajectoryPoint, plans: Sequence[List[float]], maneuver: Intention
) -> np.ndarray:
    horizon = len(plans[0])
    theta = apply_lambda(REFERENCE_MODEL.weights(maneuver), episode.cfg.lambda_star)
    cost = CostModel(
        theta, episode.env, start, horizon, episode.cfg.tau, REFERENCE_MODEL.scaling(maneuver)
    )
    u = np.array([np.concatenate([plan, np.zeros(horizon)]) for plan in plans])
    return cost(u)


def _choose_pass_accel(episode: _Episode) -> float:
    start = episode.point
    levels = np.linspace(0.0, episode.cfg.bounds.a_max, PASS_ACCEL_LEVELS)

    def law(level):
        def apply(point, state):
            return _pass_law(episode, point, level), state

        return apply

    horizon = episode.cfg.optimizer.horizon
    plans = [_simulate_plan(episode, start, law(level), horizon) for level in levels]
    return float(levels[int(np.argmin(_plan_costs(episode, start, plans, Intention.PASS)))])


def _choose_stop_decel(episode: _Episode, remaining: int) -> float:
    start = episode.point
    need = stopping_decel(start, episode.env.x_queue, episode.cfg.tau)
    hardest = -episode.cfg.bounds.a_min
    if need >= hardest:
        return hardest
    levels = np.linspace(max(need, 0.5), hardest, STOP_DECEL_LEVELS)

    def law(level):
        def apply(point, braking):
            return _stop_law(episode, point, level, bool(braking))

        return apply

    plans = [_simulate_plan(episode, start, law(level), remaining) for level in levels]
    return float(levels[int(np.argmin(_plan_costs(episode, start, plans, Intention.STOP)))])


def _finished(episode: _Episode, maneuver: Intention) -> bool:
    point, env = episode.point, episode.env
    if point.t < env.yellow_end - TIME_TOLERANCE:
        return False
    if maneuver is Intention.PASS:
        return point.x > env.stop_bar_x
    return point.v < STOP_SPEED and abs(point.x - env.x_queue) < STOP_RADIUS


def _drive_planner(episode: _Episode, maneuver: Intention, last_step: int) -> None:
    if maneuver is Intention.PASS:
        accel = _choose_pass_accel(episode)
        while episode.steps < last_step and not _finished(episode, maneuver):
            episode.step(_pass_law(episode, episode.point, accel))
        return

    decel = _choose_stop_decel(episode, last_step - episode.steps)
    braking = False
    while episode.steps < last_step and not _finished(episode, maneuver):
        a, braking = _stop_law(episode, episode.point, decel, braking)
        episode.step(a)


def _drive_optimal(episode: _Episode, maneuver: Intention, last_step: int) -> None:
    cfg = episode.cfg
    theta = apply_lambda(REFERENCE_MODEL.weights(maneuver), cfg.lambda_star)
    scaling = REFERENCE_MODEL.scaling(maneuver)
    replan_steps = max(1, int(round(cfg.replan_interval / cfg.tau)))
    braking = False
    while episode.steps < last_step and not _finished(episode, maneuver):
        if maneuver is Intention.STOP:
            point = episode.point
            remaining = episode.env.x_queue - point.x
            need = stopping_decel(point, episode.env.x_queue, cfg.tau)
            braking = braking or need >= HANDOFF_DECEL or remaining < HANDOFF_DISTANCE
            if braking:
                a, _ = _stop_law(episode, point, 0.0, True)
                episode.step(a)
                continue
        result = optimize_trajectory(theta, episode.env, episode.point, cfg.optimizer, scaling)
        for a, psi in list(zip(result.controls.a, result.controls.psi))[:replan_steps]:
            if episode.steps >= last_step:
                break
            episode.step(a, psi)


def generate_scenario(cfg: ScenarioConfig) -> ScenarioRecord:
    rng = np.random.default_rng(cfg.seed)
    v0 = float(rng.uniform(*cfg.approach_speed_range))
    distance = float(rng.uniform(*cfg.initial_distance_range))
    draw = float(rng.uniform())

    tau = cfg.tau
    onset_steps = int(round(cfg.lead_in / tau))
    total_steps = int(round(cfg.max_duration / tau))
    stopping = cfg.stop_margin + v0**2 / (2 * COMFORT_DECEL) + 0.5
    if cfg.front_vehicle is FrontVehicleProfile.BRAKE:
        stopping += VEHICLE_LENGTH + JAM_GAP + TIME_HEADWAY * v0
    if cfg.intent_policy is IntentPolicy.FORCE_PASS:
        distance = max(1.0, min(distance, v0 * cfg.yellow_duration - 1.0))
    else:
        distance = max(distance, stopping)

    x_onset = cfg.stop_bar_x - distance
    fv_trajectory, x_queue = _front_vehicle(cfg, v0, x_onset, total_steps, onset_steps)
    env = EnvironmentState(
        yellow_onset=onset_steps * tau,
        yellow_duration=cfg.yellow_duration,
        stop_bar_x=cfg.stop_bar_x,
        v_lim=cfg.v_lim,
        x_queue=x_queue,
        i_launch=int(round((cfg.yellow_duration + cfg.red_duration) / DEFAULT_TAU)),
        fv_trajectory=fv_trajectory,
        a_max_naive=cfg.a_max_naive,
    )

    initial = TrajectoryPoint(t=0.0, x=x_onset - v0 * onset_steps * tau, y=0.0, v=v0)
    episode = _Episode(cfg, env, initial)
    while episode.steps < onset_steps:
        episode.step(episode.following(v0))

    maneuver = _decide(cfg, episode.point.v, cfg.stop_bar_x - episode.point.x, draw)
    if cfg.driver is DriverModel.PLANNER:
        _drive_planner(episode, maneuver, total_steps)
    else:
        _drive_optimal(episode, maneuver, total_steps)

    tail_steps = int(round(cfg.tail / tau))
    for _ in range(min(tail_steps, total_steps - episode.steps)):
        episode.step(0.0)

    vehicle_id = f"{cfg.intent_policy.value}-{cfg.seed}"
    if not _finished(episode, maneuver):
        logger.warning(
            "Episode ended at %.1fs before completing the %s maneuver",
            episode.point.t,
            maneuver.value,
            extra={"vehicle": vehicle_id},
        )
    return ScenarioRecord(
        vehicle_id=vehicle_id,
        trajectory=episode.trajectory(),
        env=env,
        intention=maneuver,
        lambda_star=cfg.lambda_star,
        seed=cfg.seed,
    )


def generate_batch(
    cfg: ScenarioConfig, seeds: Sequence[int], scheduler: Optional[str] = None
) -> List[ScenarioRecord]:
    return compute_ordered(
        lambda seed: generate_scenario(attr.evolve(cfg, seed=seed)), seeds, scheduler
    )


SCENARIO_FIELDS = (
    "yellow_onset",
    "yellow_duration",
    "stop_bar_x",
    "v_lim",
    "x_queue",
    "i_launch",
)


def scenario_to_dict(record: ScenarioRecord, fv_csv_path: Optional[str] = None) -> Dict:
    env = record.env
    return {
        "vehicle_id": record.vehicle_id,
        "trajectory_csv_path": f"{record.vehicle_id}.csv",
        "fv_csv_path": fv_csv_path,
        "yellow_onset": env.yellow_onset,
        "yellow_duration": env.yellow_duration,
        "stop_bar_x": env.stop_bar_x,
        "v_lim": env.v_lim,
        "x_queue": env.x_queue,
        "i_launch": env.i_launch,
        "a_max_naive": env.a_max_naive,
        "intention": record.intention.value,
        "lambda_star": record.lambda_star,
        "seed": record.seed,
    }


def write_record(directory: Union[str, PathLike], record: ScenarioRecord) -> Path:
    """Write `<id>.json`, `<id>.csv` and, with a front vehicle, `<id>_fv.csv`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = record.vehicle_id
    write_trajectories_csv(directory / f"{name}.csv", {name: record.trajectory})
    fv_csv_path = None
    if record.env.fv_trajectory is not None:
        fv_csv_path = f"{name}_fv.csv"
        write_trajectories_csv(directory / fv_csv_path, {f"{name}-front": record.env.fv_trajectory})

    path = directory / f"{name}.json"
    with atomic_write(path) as f:
        f.write(json.dumps(scenario_to_dict(record, fv_csv_path), sort_keys=True, indent=2))
    return path


def write_dataset(directory: Union[str, PathLike], records: Sequence[ScenarioRecord]) -> None:
    for record in records:
        write_record(directory, record)
    logger.info("Wrote %d scenarios to %s", len(records), directory)


def _single_trajectory(path: Path, tau: float) -> Trajectory:
    trajectories = read_trajectories_csv(path, tau)
    if len(trajectories) != 1:
        raise IngestionException(path, f"expected one vehicle, found {len(trajectories)}")
    return next(iter(trajectories.values()))


def load_record(
    path: Union[str, PathLike], tau: float = DEFAULT_TAU, d_label: float = DEFAULT_D_LABEL
) -> ScenarioRecord:
    """
    Read a scenario JSON and the trajectory CSVs it names, relative to the JSON's directory.

    Scenarios without an `intention` are labeled from the trajectory.
    """
    path = Path(path)
    try:
        scenario = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise IngestionException(path, str(e)) from e
    if not isinstance(scenario, dict):
        raise IngestionException(path, "expected a JSON object")
    for field in SCENARIO_FIELDS:
        if field not in scenario:
            raise IngestionException(path, f"missing field '{field}'")

    trajectory = _single_trajectory(
        path.parent / scenario.get("trajectory_csv_path", f"{path.stem}.csv"), tau
    )
    fv_csv_path = scenario.get("fv_csv_path")
    fv_trajectory = _single_trajectory(path.parent / fv_csv_path, tau) if fv_csv_path else None
    try:
        env = EnvironmentState(
            yellow_onset=scenario["yellow_onset"],
            yellow_duration=scenario["yellow_duration"],
            stop_bar_x=scenario["stop_bar_x"],
            v_lim=scenario["v_lim"],
            x_queue=scenario["x_queue"],
            i_launch=scenario["i_launch"],
            fv_trajectory=fv_trajectory,
            a_max_naive=scenario.get("a_max_naive", 2.0),
        )
        label = scenario.get("intention")
        intention = (
            Intention.from_label(label) if label else label_trajectory(trajectory, env, d_label)
        )
    except (ValidationException, ValueError, TypeError) as e:
        raise IngestionException(path, str(e)) from e

    return ScenarioRecord(
        vehicle_id=str(scenario.get("vehicle_id", path.stem)),
        trajectory=trajectory,
        env=env,
        intention=intention,
        lambda_star=scenario.get("lambda_star"),
        seed=scenario.get("seed"),
    )


def load_dataset(
    path: Union[str, PathLike], tau: float = DEFAULT_TAU, d_label: float = DEFAULT_D_LABEL
) -> List[ScenarioRecord]:
    """Scenarios from a directory of scenario JSON files, or from a single one."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.json"))
    elif path.is_file():
        files = [path]
    else:
        raise IngestionException(path, "no such file or directory")
    if not files:
        raise IngestionException(path, "no scenario files found")
    records = [load_record(f, tau, d_label) for f in files]
    logger.info("Loaded %d scenarios from %s", len(records), path)
    return records


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class DatasetPlan:
    train_per_maneuver: int = 30
    test_size: int = 60
    intention_size: int = 361
    base: ScenarioConfig = attr.Factory(ScenarioConfig)


def standard_datasets(
    plan: DatasetPlan,
    seed: int = 0,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    scheduler: Optional[str] = None,
) -> Dict[str, List[ScenarioRecord]]:
    """
    Training, test and intention sets drawn from one seed.

    Training drivers all have lambda 0.5 and a forced maneuver. Test and intention drivers
    decide in the dilemma zone with a lambda drawn from the grid.
    """
    rng = np.random.default_rng(seed)
    every_front = list(FrontVehicleProfile)
    passable_front = [FrontVehicleProfile.NONE, FrontVehicleProfile.CRUISE]

    def configs(policy: IntentPolicy, count: int, fronts, lambdas) -> List[ScenarioConfig]:
        return [
            attr.evolve(
                plan.base,
                seed=int(rng.integers(2**31 - 1)),
                intent_policy=policy,
                front_vehicle=fronts[int(rng.integers(len(fronts)))],
                lambda_star=float(lambdas[int(rng.integers(len(lambdas)))]),
            )
            for _ in range(count)
        ]

    plans = {
        "train": configs(IntentPolicy.FORCE_PASS, plan.train_per_maneuver, passable_front, [0.5])
        + configs(IntentPolicy.FORCE_STOP, plan.train_per_maneuver, every_front, [0.5]),
        "test": configs(IntentPolicy.DILEMMA_ZONE, plan.test_size, every_front, lambda_grid),
        "intention": configs(
            IntentPolicy.DILEMMA_ZONE, plan.intention_size, every_front, lambda_grid
        ),
    }
    datasets = {}
    for name, cfgs in plans.items():
        records = compute_ordered(generate_scenario, cfgs, scheduler)
        datasets[name] = [
            attr.evolve(record, vehicle_id=f"{name}-{i:03d}") for i, record in enumerate(records)
        ]
        logger.info("Generated %d %s scenarios", len(records), name)
    return datasets
