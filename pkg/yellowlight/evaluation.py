"""
Offline scoring of intention and trajectory predictions.

Intention predictions are scored at every yellow-phase sample against the record label, for
the Bayesian network and for the naive kinematic rule alike. Trajectory predictions are scored
per replan cycle by mean planar distance to the samples that actually followed.
"""

import json
import logging
import math
from os import PathLike
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import attr
import cattr
import numpy as np
import pandas as pd

from . import Intention
from .core import overlap_distance, rollout
from .errors import EmptyEvaluationException
from .intention import (
    DEFAULT_D_LABEL,
    BnModel,
    build_evidence,
    infer_intention,
    label_trajectory,
    naive_intention,
)
from .online import PredictionLog
from .scenario import ScenarioRecord
from .util import atomic_write

logger = logging.getLogger(__name__)

DECILES = 10

TRACE_COLUMNS = [
    "vehicle_id",
    "t",
    "elapsed_yellow",
    "remaining_yellow",
    "tti",
    "lon_accel",
    "p_pass",
    "p_stop",
    "predicted",
    "naive",
    "label",
]
PROFILE_COLUMNS = ["vehicle_id", "cycle_t", "kind", "t", "x", "y", "v"]


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class ConfusionCounts:
    """Pass is the positive class."""

    true_pass: int = 0
    false_pass: int = 0
    true_stop: int = 0
    false_stop: int = 0

    @property
    def total(self) -> int:
        return self.true_pass + self.false_pass + self.true_stop + self.false_stop

    @property
    def accuracy(self) -> Optional[float]:
        return _ratio(self.true_pass + self.true_stop, self.total)

    @classmethod
    def from_labels(cls, predicted: Sequence[str], label: Sequence[str]) -> "ConfusionCounts":
        predicted = np.asarray(predicted) == Intention.PASS.value
        label = np.asarray(label) == Intention.PASS.value
        return cls(
            true_pass=int(np.sum(predicted & label)),
            false_pass=int(np.sum(predicted & ~label)),
            true_stop=int(np.sum(~predicted & ~label)),
            false_stop=int(np.sum(~predicted & label)),
        )


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class DecileAccuracy:
    decile: int
    lower: float
    upper: float
    points: int
    accuracy: Optional[float]
    naive_accuracy: Optional[float]


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class IntentionReport:
    points: int
    vehicles: int
    accuracy: Optional[float]
    naive_accuracy: Optional[float]
    confusion: ConfusionCounts
    naive_confusion: ConfusionCounts
    by_decile: List[DecileAccuracy]


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class TrajectoryReport:
    vehicles: int
    cycles: int
    skipped_cycles: int
    fallback_cycles: int
    infeasible_cycles: int
    mean_ed: Optional[float]
    baseline_mean_ed: Optional[float]
    mean_ed_by_maneuver: Dict[str, Optional[float]]
    win_rate: Optional[float]


@attr.s(auto_attribs=True)
class EvaluationReport:
    intention: Optional[IntentionReport] = None
    trajectory: Optional[TrajectoryReport] = None

    converter = cattr.Converter()
    converter.register_unstructure_hook(float, lambda x: x if math.isfinite(x) else None)

    def to_dict(self) -> Dict[str, Any]:
        return self.converter.unstructure(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write(self, path: Union[str, PathLike]) -> None:
        with atomic_write(path) as f:
            f.write(self.to_json())


def intention_trace(
    bn: BnModel, records: Iterable[ScenarioRecord], d_label: float = DEFAULT_D_LABEL
) -> pd.DataFrame:
    """One row per yellow-phase sample with both predictions and the label."""
    rows = []
    for record in records:
        env = record.env
        label = record.intention or label_trajectory(record.trajectory, env, d_label)
        for point in record.trajectory:
            if not env.in_yellow(point.t):
                continue
            evidence = build_evidence(point, env)
            posterior = infer_intention(bn, evidence)
            rows.append(
                {
                    "vehicle_id": record.vehicle_id,
                    "t": point.t,
                    "elapsed_yellow": evidence.elapsed_yellow,
                    "remaining_yellow": max(0.0, env.yellow_end - point.t),
                    "tti": evidence.tti,
                    "lon_accel": evidence.lon_accel,
                    "p_pass": posterior.p_pass,
                    "p_stop": posterior.p_stop,
                    "predicted": posterior.maneuver.value,
                    "naive": naive_intention(point, env).value,
                    "label": label.value,
                }
            )
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def _decile(trace: pd.DataFrame) -> pd.Series:
    duration = trace["elapsed_yellow"] + trace["remaining_yellow"]
    fraction = trace["elapsed_yellow"] / duration.where(duration > 0, 1.0)
    return np.minimum(np.floor(fraction * DECILES), DECILES - 1).astype(int)


def accuracy_by_decile(trace: pd.DataFrame) -> pd.DataFrame:
    """Accuracy of both predictors per tenth of the elapsed yellow phase."""
    frame = pd.DataFrame(
        {
            "decile": _decile(trace),
            "correct": trace["predicted"] == trace["label"],
            "naive_correct": trace["naive"] == trace["label"],
        }
    )
    grouped = frame.groupby("decile")
    table = pd.DataFrame(
        {
            "points": grouped.size(),
            "accuracy": grouped["correct"].mean(),
            "naive_accuracy": grouped["naive_correct"].mean(),
        }
    ).reindex(range(DECILES))
    table["points"] = table["points"].fillna(0).astype(int)
    table.index.name = "decile"
    table = table.reset_index()
    table.insert(1, "lower", table["decile"] / DECILES)
    table.insert(2, "upper", (table["decile"] + 1) / DECILES)
    return table


def summarize_intention(trace: pd.DataFrame) -> IntentionReport:
    if trace.empty:
        raise EmptyEvaluationException("intention", "No yellow-phase samples to score.")
    confusion = ConfusionCounts.from_labels(trace["predicted"], trace["label"])
    naive_confusion = ConfusionCounts.from_labels(trace["naive"], trace["label"])

    def optional(value) -> Optional[float]:
        return None if pd.isna(value) else float(value)

    by_decile = [
        DecileAccuracy(
            decile=int(row.decile),
            lower=float(row.lower),
            upper=float(row.upper),
            points=int(row.points),
            accuracy=optional(row.accuracy),
            naive_accuracy=optional(row.naive_accuracy),
        )
        for row in accuracy_by_decile(trace).itertuples()
    ]
    return IntentionReport(
        points=confusion.total,
        vehicles=int(trace["vehicle_id"].nunique()),
        accuracy=confusion.accuracy,
        naive_accuracy=naive_confusion.accuracy,
        confusion=confusion,
        naive_confusion=naive_confusion,
        by_decile=by_decile,
    )


def evaluate_intention(
    bn: BnModel, records: Iterable[ScenarioRecord], d_label: float = DEFAULT_D_LABEL
) -> IntentionReport:
    report = summarize_intention(intention_trace(bn, records, d_label))
    logger.info(
        "Intention accuracy %.3f (naive %.3f) over %d points",
        report.accuracy,
        report.naive_accuracy,
        report.points,
    )
    return report


def _reconstructs(cycle) -> bool:
    replayed = rollout(cycle.prediction.start, cycle.controls, cycle.prediction.dt)
    prediction = cycle.prediction
    return (
        np.array_equal(replayed.x, prediction.x)
        and np.array_equal(replayed.y, prediction.y)
        and np.array_equal(replayed.v, prediction.v)
    )


def evaluate_trajectory(
    logs: Iterable[PredictionLog], truth: Iterable[ScenarioRecord]
) -> TrajectoryReport:
    """
    Mean planar error of predictions and of the constant-velocity baseline.

    Cycles without a realized sample after them are skipped. Errors are averaged in
    (vehicle, cycle time) order, so the report does not depend on the order of its inputs.
    """
    records: Mapping[str, ScenarioRecord] = {record.vehicle_id: record for record in truth}
    rows = []
    skipped = fallbacks = infeasible = 0
    vehicles = set()
    for log in logs:
        record = records.get(log.vehicle_id)
        if record is None:
            logger.warning("No ground truth; skipping", extra={"vehicle": log.vehicle_id})
            skipped += len(log.cycles)
            continue
        vehicles.add(log.vehicle_id)
        for cycle in log.cycles:
            fallbacks += cycle.fallback
            infeasible += not _reconstructs(cycle)
            model = overlap_distance(cycle.prediction, record.trajectory)
            baseline = overlap_distance(cycle.baseline, record.trajectory)
            if model is None or baseline is None:
                logger.info(
                    "No realized samples after t=%.2f; skipping cycle",
                    cycle.t,
                    extra={"vehicle": log.vehicle_id},
                )
                skipped += 1
                continue
            rows.append((log.vehicle_id, cycle.t, record.intention.value, model, baseline))

    if infeasible:
        logger.warning("%d predictions do not replay from their controls", infeasible)
    frame = pd.DataFrame(rows, columns=["vehicle_id", "t", "maneuver", "model", "baseline"])
    frame = frame.sort_values(["vehicle_id", "t"], kind="mergesort")

    def mean(series: pd.Series) -> Optional[float]:
        return float(series.mean()) if len(series) else None

    by_maneuver = {
        maneuver.value: mean(frame.loc[frame["maneuver"] == maneuver.value, "model"])
        for maneuver in Intention
    }
    report = TrajectoryReport(
        vehicles=len(vehicles),
        cycles=len(frame),
        skipped_cycles=skipped,
        fallback_cycles=int(fallbacks),
        infeasible_cycles=int(infeasible),
        mean_ed=mean(frame["model"]),
        baseline_mean_ed=mean(frame["baseline"]),
        mean_ed_by_maneuver=by_maneuver,
        win_rate=mean(frame["model"] < frame["baseline"]),
    )
    if report.cycles:
        logger.info(
            "Mean ED %.3f m (baseline %.3f m), win rate %.3f over %d cycles",
            report.mean_ed,
            report.baseline_mean_ed,
            report.win_rate,
            report.cycles,
        )
    return report


def trajectory_profiles(
    logs: Iterable[PredictionLog], truth: Iterable[ScenarioRecord]
) -> pd.DataFrame:
    """Predicted, baseline and realized samples per cycle, one point per row."""
    records = {record.vehicle_id: record for record in truth}
    rows: List[Dict[str, Any]] = []

    def emit(vehicle_id: str, cycle_t: float, kind: str, points) -> None:
        rows.extend(
            {
                "vehicle_id": vehicle_id,
                "cycle_t": cycle_t,
                "kind": kind,
                "t": p.t,
                "x": p.x,
                "y": p.y,
                "v": p.v,
            }
            for p in points
        )

    for log in logs:
        record = records.get(log.vehicle_id)
        for cycle in log.cycles:
            emit(log.vehicle_id, cycle.t, "prediction", cycle.prediction)
            emit(log.vehicle_id, cycle.t, "baseline", cycle.baseline)
            if record is None:
                continue
            start, end = cycle.prediction.start.t, cycle.prediction.end.t
            emit(
                log.vehicle_id,
                cycle.t,
                "truth",
                (p for p in record.trajectory if start - 1e-6 <= p.t <= end + 1e-6),
            )
    return pd.DataFrame(rows, columns=PROFILE_COLUMNS)


def write_frame(path: Union[str, PathLike], frame: pd.DataFrame) -> None:
    with atomic_write(path) as f:
        frame.to_csv(f, index=False)
