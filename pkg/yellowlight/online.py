"""
Rolling-horizon prediction for one vehicle through the yellow phase.

Each replan cycle first moves the driver characteristic lambda to the candidate whose previous
prediction best matched what was observed since, then infers the intention, and finally
predicts one trajectory per candidate lambda with the matching maneuver's weights.
"""

import json
import logging
import math
from os import PathLike
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import attr
import cattr
import numpy as np

from . import Intention
from .core import (
    TIME_TOLERANCE,
    ControlBounds,
    ControlSequence,
    EnvironmentState,
    Trajectory,
    TrajectoryPoint,
    euclidean_distance,
    overlap_distance,
    rollout,
    sample_times,
)
from .errors import ParameterException, ShapeException, ValidationException, YellowLightException
from .features import apply_lambda
from .intention import BnModel, IntentionPosterior, build_evidence, infer_intention
from .irl import IrlModel
from .trajopt import OptimizerConfig, optimize_trajectory
from .util import atomic_write, compute_ordered

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
STOP_SPEED = 0.1
STOP_RADIUS = 1.0
# two candidate errors closer than this count as a tie
TIE_TOLERANCE = 1e-12

_converter = cattr.Converter()


@attr.s(auto_attribs=True, frozen=True)
class DriverCharacteristic:
    lambda_: float = 0.5
    grid: Tuple[float, ...] = attr.ib(default=DEFAULT_LAMBDA_GRID, converter=tuple)

    def __attrs_post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] > 1:
            raise ParameterException("grid", "Lambda grid must increase strictly within [0, 1].")
        if self.lambda_ not in self.grid:
            raise ParameterException("lambda", f"{self.lambda_} is not on the grid {self.grid}.")


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class OnlineConfig:
    replan_interval: float = 0.5
    initial_lambda: float = 0.5
    lambda_grid: Tuple[float, ...] = attr.ib(default=DEFAULT_LAMBDA_GRID, converter=tuple)
    optimizer: OptimizerConfig = attr.Factory(OptimizerConfig)
    scheduler: Optional[str] = None

    def __attrs_post_init__(self):
        if not self.replan_interval > 0:
            raise ParameterException("replan_interval", "Must be positive.")
        self.characteristic()

    def characteristic(self) -> DriverCharacteristic:
        return DriverCharacteristic(lambda_=self.initial_lambda, grid=self.lambda_grid)


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class CycleRecord:
    t: float
    posterior: IntentionPosterior
    maneuver: Intention
    lambda_: float
    prediction: Trajectory
    controls: ControlSequence
    baseline: Trajectory
    ed_realized: Optional[float] = None
    ed_baseline: Optional[float] = None
    fallback: bool = False

    def to_dict(self, vehicle_id: str = "") -> dict:
        return {
            "vehicle_id": vehicle_id,
            "t": self.t,
            "dt": self.prediction.dt,
            "p_pass": self.posterior.p_pass,
            "p_stop": self.posterior.p_stop,
            "maneuver": self.maneuver.value,
            "lambda": self.lambda_,
            "pred": [[p.x, p.y, p.v] for p in self.prediction],
            "baseline": [[p.x, p.y, p.v] for p in self.baseline],
            "controls": [[a, psi] for a, psi in zip(self.controls.a, self.controls.psi)],
            "bounds": _converter.unstructure(self.controls.bounds),
            "ed_realized": self.ed_realized,
            "ed_baseline": self.ed_baseline,
            "fallback": self.fallback,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CycleRecord":
        controls = ControlSequence(
            a=[c[0] for c in d["controls"]],
            psi=[c[1] for c in d["controls"]],
            bounds=_converter.structure(d["bounds"], ControlBounds),
        )
        return cls(
            t=d["t"],
            posterior=IntentionPosterior(d["p_pass"], d["p_stop"]),
            maneuver=Intention(d["maneuver"]),
            lambda_=d["lambda"],
            prediction=_logged_trajectory(d["t"], d["dt"], d["pred"], controls),
            controls=controls,
            baseline=_logged_trajectory(d["t"], d["dt"], d["baseline"]),
            ed_realized=d.get("ed_realized"),
            ed_baseline=d.get("ed_baseline"),
            fallback=d.get("fallback", False),
        )


def _logged_trajectory(
    t0: float, dt: float, rows: List[List[float]], controls: Optional[ControlSequence] = None
) -> Trajectory:
    times = sample_times(t0, len(rows) - 1, dt)
    accel = (0.0,) + (controls.a if controls else (0.0,) * (len(rows) - 1))
    heading = (0.0,) + (controls.psi if controls else (0.0,) * (len(rows) - 1))
    return Trajectory(
        [
            TrajectoryPoint(t=t, x=x, y=y, v=v, a=a, psi=psi)
            for t, (x, y, v), a, psi in zip(times, rows, accel, heading)
        ],
        dt=dt,
    )


@attr.s(auto_attribs=True)
class PredictionLog:
    vehicle_id: str
    cycles: List[CycleRecord] = attr.Factory(list)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(cycle.to_dict(self.vehicle_id), sort_keys=True) + "\n"
            for cycle in self.cycles
        )


def write_prediction_logs(path: Union[str, PathLike], logs: Iterable[PredictionLog]) -> None:
    with atomic_write(path) as f:
        for log in logs:
            f.write(log.to_jsonl())


def read_prediction_logs(path: Union[str, PathLike]) -> List[PredictionLog]:
    logs: Dict[str, PredictionLog] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            d = json.loads(line)
            log = logs.setdefault(d["vehicle_id"], PredictionLog(vehicle_id=d["vehicle_id"]))
            log.cycles.append(CycleRecord.from_dict(d))
    return list(logs.values())


def constant_velocity_baseline(
    state: TrajectoryPoint, horizon: int, tau: float = 0.1
) -> Trajectory:
    """Hold speed and heading for `horizon` steps."""
    controls = ControlSequence(
        a=[0.0] * horizon,
        psi=[state.psi] * horizon,
        bounds=ControlBounds(psi_max=math.pi / 2),
    )
    return rollout(state, controls, tau)


def update_lambda(
    dc: DriverCharacteristic,
    candidate_preds: Mapping[float, Trajectory],
    observed: Trajectory,
) -> DriverCharacteristic:
    """
    Move lambda to the candidate whose prediction best matches the observed window.

    Each candidate is truncated to the observed length and compared by mean planar distance.
    Ties go to the candidate closest to the current lambda, then to the smaller one.
    """
    missing = [lam for lam in dc.grid if lam not in candidate_preds]
    if missing:
        raise ShapeException("candidates", f"No prediction for lambda {missing}.")
    distances = {}
    for lam in dc.grid:
        prediction = candidate_preds[lam]
        if len(observed) > len(prediction):
            raise ShapeException("observed", "Observed window is longer than the prediction.")
        if abs(prediction.start.t - observed.start.t) > 1e-6:
            raise ShapeException("observed", "Observed window does not start with the prediction.")
        distances[lam] = euclidean_distance(prediction.truncate(len(observed)), observed)
    best = min(distances.values())
    tied = [lam for lam in dc.grid if distances[lam] - best <= TIE_TOLERANCE]
    chosen = min(tied, key=lambda lam: (abs(lam - dc.lambda_), lam))
    return attr.evolve(dc, lambda_=chosen)


class RollingPredictor:
    """Consumes one vehicle's samples in time order and replans on a fixed cadence."""

    def __init__(
        self,
        env: EnvironmentState,
        bn: BnModel,
        irl: IrlModel,
        cfg: Optional[OnlineConfig] = None,
        vehicle_id: str = "",
    ):
        self.env = env
        self.bn = bn
        self.irl = irl
        self.cfg = cfg or OnlineConfig()
        self.vehicle_id = vehicle_id
        self.dc = self.cfg.characteristic()
        self.history: List[TrajectoryPoint] = []
        self.records: List[CycleRecord] = []
        self.finished = False
        self._first_cycle: Optional[float] = None
        self._cycle_sample: Optional[int] = None
        self._candidates: Optional[Dict[float, Trajectory]] = None

    def _terminated(self, point: TrajectoryPoint) -> bool:
        stopped = point.v < STOP_SPEED and abs(point.x - self.env.x_queue) < STOP_RADIUS
        return point.x > self.env.stop_bar_x or stopped

    def observe(self, point: TrajectoryPoint) -> Optional[CycleRecord]:
        """Record a sample; returns the cycle record when the sample triggers a replan."""
        if self.finished:
            return None
        if self.history and point.t <= self.history[-1].t:
            raise ShapeException("stream", "Samples must arrive in increasing time order.")
        self.history.append(point)
        if point.t < self.env.yellow_onset - TIME_TOLERANCE:
            return None
        if self._terminated(point):
            self.finished = True
            return None
        if self._first_cycle is None:
            self._first_cycle = point.t
        due = self._first_cycle + len(self.records) * self.cfg.replan_interval
        if point.t < due - 1e-6:
            return None
        return self._cycle(point)

    def _predict_candidates(
        self, point: TrajectoryPoint, maneuver: Intention
    ) -> Dict[float, Tuple[Trajectory, ControlSequence]]:
        theta = self.irl.weights(maneuver)
        scaling = self.irl.scaling(maneuver)

        def solve(lam: float) -> Tuple[Trajectory, ControlSequence]:
            result = optimize_trajectory(
                apply_lambda(theta, lam), self.env, point, self.cfg.optimizer, scaling
            )
            return result.trajectory, result.controls

        grid = self.dc.grid
        return dict(zip(grid, compute_ordered(solve, grid, self.cfg.scheduler)))

    def _cycle(self, point: TrajectoryPoint) -> CycleRecord:
        sample = len(self.history) - 1
        extra = {"vehicle": self.vehicle_id}
        if self._candidates is not None and self._cycle_sample is not None:
            try:
                observed = Trajectory(
                    self.history[self._cycle_sample : sample + 1], dt=self.cfg.optimizer.tau
                )
                self.dc = update_lambda(self.dc, self._candidates, observed)
            except ValidationException as e:
                logger.exception(str(e), exc_info=e, extra=extra)

        optimizer = self.cfg.optimizer
        baseline = constant_velocity_baseline(point, optimizer.horizon, optimizer.tau)
        previous = self.records[-1] if self.records else None
        try:
            posterior = infer_intention(self.bn, build_evidence(point, self.env))
            maneuver = posterior.maneuver
            candidates = self._predict_candidates(point, maneuver)
            prediction, controls = candidates[self.dc.lambda_]
            self._candidates = {lam: trajectory for lam, (trajectory, _) in candidates.items()}
            fallback = False
        except (YellowLightException, FloatingPointError, ValueError) as e:
            logger.exception(
                "Prediction failed at t=%.2f, reusing the previous one: %s",
                point.t,
                e,
                extra=extra,
            )
            self._candidates = None
            fallback = True
            if previous is not None:
                posterior, maneuver = previous.posterior, previous.maneuver
                prediction = previous.prediction.shift_time(point.t - previous.t)
                controls = previous.controls
            else:
                posterior, maneuver = IntentionPosterior(0.5, 0.5), Intention.STOP
                prediction = baseline
                controls = ControlSequence(
                    a=[0.0] * optimizer.horizon,
                    psi=[point.psi] * optimizer.horizon,
                    bounds=ControlBounds(psi_max=math.pi / 2),
                )

        self._cycle_sample = sample
        record = CycleRecord(
            t=point.t,
            posterior=posterior,
            maneuver=maneuver,
            lambda_=self.dc.lambda_,
            prediction=prediction,
            controls=controls,
            baseline=baseline,
            fallback=fallback,
        )
        self.records.append(record)
        logger.debug(
            "t=%.2f %s p_pass=%.3f lambda=%.1f",
            point.t,
            maneuver.value,
            posterior.p_pass,
            self.dc.lambda_,
            extra=extra,
        )
        return record

    def finish(self) -> PredictionLog:
        """Close the episode and score each cycle against the samples observed after it."""
        try:
            truth: Optional[Trajectory] = Trajectory(self.history, dt=self.cfg.optimizer.tau)
        except ValidationException:
            logger.warning(
                "Observed samples are not uniformly spaced; skipping realized errors",
                extra={"vehicle": self.vehicle_id},
            )
            truth = None
        cycles = [
            attr.evolve(
                record,
                ed_realized=overlap_distance(record.prediction, truth),
                ed_baseline=overlap_distance(record.baseline, truth),
            )
            if truth is not None
            else record
            for record in self.records
        ]
        return PredictionLog(vehicle_id=self.vehicle_id, cycles=cycles)


def rolling_predict(
    stream: Iterable[TrajectoryPoint],
    env: EnvironmentState,
    bn: BnModel,
    irl: IrlModel,
    cfg: Optional[OnlineConfig] = None,
    vehicle_id: str = "",
) -> PredictionLog:
    predictor = RollingPredictor(env, bn, irl, cfg, vehicle_id)
    for point in stream:
        predictor.observe(point)
        if predictor.finished:
            break
    return predictor.finish()
