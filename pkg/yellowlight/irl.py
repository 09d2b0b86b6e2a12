"""
Maximum-entropy inverse reinforcement learning of per-maneuver feature weights.

Trajectories are assumed exponentially more likely the lower their weighted feature cost.
Weights are kept positive by learning eta = log(theta). Each epoch approximates the expected
features under the current weights by the features of the optimal trajectory for every
demonstrated scene, and moves eta along the feature-matching gradient.
"""

import json
import logging
from typing import TYPE_CHECKING, Iterable, List, Optional, Sequence, Tuple

import attr
import cattr
import numpy as np

from . import Intention
from .core import EnvironmentState, Trajectory
from .errors import (
    InfeasibleSceneException,
    ParameterException,
    ShapeException,
    TrainingDataException,
)
from .features import (
    MANEUVER_FEATURES,
    FeatureScaling,
    FeatureVector,
    WeightVector,
    compute_features,
    fit_scaling,
)
from .trajopt import OptimizerConfig, optimize_trajectory
from .util import compute_ordered, structure

if TYPE_CHECKING:
    from .scenario import ScenarioRecord

logger = logging.getLogger(__name__)

# bound on log-weights; keeps theta strictly positive and finite
ETA_LIMIT = 50.0


@attr.s(auto_attribs=True, frozen=True)
class Demonstration:
    trajectory: Trajectory
    env: EnvironmentState

    @property
    def horizon(self) -> int:
        return len(self.trajectory) - 1


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class TrainConfig:
    learning_rate: float = 0.05
    grad_tol: float = 0.05
    max_epochs: int = 300
    optimizer: OptimizerConfig = attr.Factory(OptimizerConfig)
    scheduler: Optional[str] = None

    def __attrs_post_init__(self):
        if not self.learning_rate > 0:
            raise ParameterException("learning_rate", "Must be positive.")
        if not self.grad_tol > 0:
            raise ParameterException("grad_tol", "Must be positive.")
        if self.max_epochs < 0:
            raise ParameterException("max_epochs", "Must be non-negative.")


@attr.s(auto_attribs=True, frozen=True)
class TrainingSummary:
    epochs: int
    gap: float
    converged: bool


@attr.s(auto_attribs=True, frozen=True)
class TrainResult:
    weights: WeightVector
    scaling: FeatureScaling
    summary: TrainingSummary
    gaps: Tuple[float, ...]
    thetas: Tuple[Tuple[float, ...], ...]


@attr.s(auto_attribs=True)
class _ManeuverEntry:
    features: List[str]
    theta: List[float]
    scale: List[float]
    training: Optional[TrainingSummary] = None


_converter = cattr.Converter()


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class IrlModel:
    theta_pass: WeightVector
    theta_stop: WeightVector
    scaling_pass: FeatureScaling
    scaling_stop: FeatureScaling
    summary_pass: Optional[TrainingSummary] = None
    summary_stop: Optional[TrainingSummary] = None

    def __attrs_post_init__(self):
        for value, maneuver in (
            (self.theta_pass, Intention.PASS),
            (self.scaling_pass, Intention.PASS),
            (self.theta_stop, Intention.STOP),
            (self.scaling_stop, Intention.STOP),
        ):
            if value.maneuver is not maneuver:
                raise ParameterException(maneuver.value, "Model part is for the other maneuver.")

    @classmethod
    def from_results(cls, pass_result: TrainResult, stop_result: TrainResult) -> "IrlModel":
        return cls(
            theta_pass=pass_result.weights,
            theta_stop=stop_result.weights,
            scaling_pass=pass_result.scaling,
            scaling_stop=stop_result.scaling,
            summary_pass=pass_result.summary,
            summary_stop=stop_result.summary,
        )

    def weights(self, maneuver: Intention) -> WeightVector:
        return self.theta_pass if maneuver is Intention.PASS else self.theta_stop

    def scaling(self, maneuver: Intention) -> FeatureScaling:
        return self.scaling_pass if maneuver is Intention.PASS else self.scaling_stop

    def to_dict(self) -> dict:
        return {
            maneuver.value: _converter.unstructure(
                _ManeuverEntry(
                    features=list(MANEUVER_FEATURES[maneuver]),
                    theta=list(self.weights(maneuver).theta),
                    scale=list(self.scaling(maneuver).scale),
                    training=self.summary_pass if maneuver is Intention.PASS else self.summary_stop,
                )
            )
            for maneuver in Intention
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IrlModel":
        parts = {}
        for maneuver in Intention:
            if maneuver.value not in d:
                raise ShapeException("irl model", f"Missing '{maneuver.value}' section.")
            entry = structure(_converter, d[maneuver.value], _ManeuverEntry, maneuver.value)
            if tuple(entry.features) != MANEUVER_FEATURES[maneuver]:
                raise ShapeException(maneuver.value, f"Unexpected feature order {entry.features}.")
            parts[maneuver] = entry
        return cls(
            theta_pass=WeightVector(Intention.PASS, parts[Intention.PASS].theta),
            theta_stop=WeightVector(Intention.STOP, parts[Intention.STOP].theta),
            scaling_pass=FeatureScaling(Intention.PASS, parts[Intention.PASS].scale),
            scaling_stop=FeatureScaling(Intention.STOP, parts[Intention.STOP].scale),
            summary_pass=parts[Intention.PASS].training,
            summary_stop=parts[Intention.STOP].training,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "IrlModel":
        return cls.from_dict(json.loads(text))


def softmin_probabilities(costs) -> np.ndarray:
    """Probabilities proportional to exp(-cost), shifted by the minimum cost."""
    costs = np.asarray(costs, dtype=float)
    if costs.size == 0:
        raise ShapeException("costs", "Need at least one candidate.")
    weights = np.exp(-(costs - costs.min()))
    return weights / weights.sum()


def _log_softmin(costs: np.ndarray) -> np.ndarray:
    shifted = -(costs - costs.min())
    return shifted - np.log(np.sum(np.exp(shifted)))


def _scaled_features(
    candidates: Sequence[Trajectory],
    env: EnvironmentState,
    maneuver: Intention,
    scaling: FeatureScaling,
) -> np.ndarray:
    return np.array(
        [scaling.apply(compute_features(c, env, maneuver).as_array()) for c in candidates]
    )


def maxent_probability(
    theta: WeightVector,
    candidates: Sequence[Trajectory],
    env: EnvironmentState,
    scaling: Optional[FeatureScaling] = None,
) -> np.ndarray:
    if not candidates:
        raise ShapeException("candidates", "Need at least one candidate.")
    scaling = scaling or FeatureScaling.unit(theta.maneuver)
    features = _scaled_features(candidates, env, theta.maneuver, scaling)
    return softmin_probabilities(features @ theta.as_array())


def _demo_index(demo: Demonstration, candidates: Sequence[Trajectory]) -> int:
    try:
        return list(candidates).index(demo.trajectory)
    except ValueError:
        raise ShapeException("candidates", "Demonstration missing from its candidate set.")


def _check_candidate_sets(demos, candidate_sets) -> None:
    if not demos:
        raise ShapeException("demos", "Need at least one demonstration.")
    if len(demos) != len(candidate_sets):
        raise ShapeException("candidate sets", "Need exactly one candidate set per demo.")


def log_likelihood(
    theta: WeightVector,
    demos: Sequence[Demonstration],
    candidate_sets: Sequence[Sequence[Trajectory]],
    scaling: Optional[FeatureScaling] = None,
) -> float:
    """Mean log-probability of each demonstration within its enumerated candidate set."""
    _check_candidate_sets(demos, candidate_sets)
    scaling = scaling or FeatureScaling.unit(theta.maneuver)
    total = 0.0
    for demo, candidates in zip(demos, candidate_sets):
        index = _demo_index(demo, candidates)
        features = _scaled_features(candidates, demo.env, theta.maneuver, scaling)
        total += float(_log_softmin(features @ theta.as_array())[index])
    return total / len(demos)


def exact_likelihood_gradient(
    theta: WeightVector,
    demos: Sequence[Demonstration],
    candidate_sets: Sequence[Sequence[Trajectory]],
    scaling: Optional[FeatureScaling] = None,
) -> np.ndarray:
    """Gradient of `log_likelihood` with respect to theta."""
    _check_candidate_sets(demos, candidate_sets)
    scaling = scaling or FeatureScaling.unit(theta.maneuver)
    gradient = np.zeros(len(theta.theta))
    for demo, candidates in zip(demos, candidate_sets):
        index = _demo_index(demo, candidates)
        features = _scaled_features(candidates, demo.env, theta.maneuver, scaling)
        probabilities = softmin_probabilities(features @ theta.as_array())
        gradient += probabilities @ features - features[index]
    return gradient / len(demos)


def _demo_features(
    demos: Sequence[Demonstration], maneuver: Intention
) -> List[FeatureVector]:
    features = []
    for index, demo in enumerate(demos):
        if demo.horizon < 1:
            raise ShapeException(f"demo {index}", "Demonstration needs at least two points.")
        try:
            features.append(compute_features(demo.trajectory, demo.env, maneuver))
        except InfeasibleSceneException as e:
            raise TrainingDataException(index, str(e)) from e
    return features


def _expected_features(
    theta: WeightVector,
    demos: Sequence[Demonstration],
    optimizer: OptimizerConfig,
    scaling: FeatureScaling,
    scheduler: Optional[str],
) -> np.ndarray:
    def solve(index: int) -> np.ndarray:
        demo = demos[index]
        cfg = attr.evolve(optimizer, horizon=demo.horizon, tau=demo.trajectory.dt)
        try:
            result = optimize_trajectory(theta, demo.env, demo.trajectory.start, cfg, scaling)
        except InfeasibleSceneException as e:
            raise TrainingDataException(index, str(e)) from e
        return scaling.apply(result.features.as_array())

    return np.mean(compute_ordered(solve, range(len(demos)), scheduler), axis=0)


def likelihood_gradient(
    theta: WeightVector,
    demos: Sequence[Demonstration],
    cfg: Optional[TrainConfig] = None,
    scaling: Optional[FeatureScaling] = None,
) -> np.ndarray:
    """Feature-matching gradient with each expectation replaced by the optimal trajectory."""
    cfg = cfg or TrainConfig()
    scaling = scaling or FeatureScaling.unit(theta.maneuver)
    if not demos:
        raise ShapeException("demos", "Need at least one demonstration.")
    empirical = np.mean(
        [scaling.apply(f.as_array()) for f in _demo_features(demos, theta.maneuver)], axis=0
    )
    expected = _expected_features(theta, demos, cfg.optimizer, scaling, cfg.scheduler)
    return expected - empirical


def train_maxent_irl(
    demos: Sequence[Demonstration], maneuver: Intention, cfg: Optional[TrainConfig] = None
) -> TrainResult:
    """
    Learn positive weights whose optimal trajectories match the demonstrated features.

    Stops once the largest absolute feature gap is within `cfg.grad_tol`, or after
    `cfg.max_epochs` updates; either way the weights with the smallest gap are returned.
    """
    cfg = cfg or TrainConfig()
    if len(demos) < 2:
        raise ParameterException("demos", "Need at least two demonstrations.")
    raw = _demo_features(demos, maneuver)
    scaling = fit_scaling(raw)
    empirical = np.mean([scaling.apply(f.as_array()) for f in raw], axis=0)

    eta = np.zeros(len(MANEUVER_FEATURES[maneuver]))
    gaps: List[float] = []
    thetas: List[Tuple[float, ...]] = []
    best: Optional[Tuple[WeightVector, float]] = None
    converged = False
    for epoch in range(cfg.max_epochs + 1):
        theta = WeightVector(maneuver=maneuver, theta=np.exp(eta))
        gradient = (
            _expected_features(theta, demos, cfg.optimizer, scaling, cfg.scheduler) - empirical
        )
        gap = float(np.max(np.abs(gradient)))
        gaps.append(gap)
        thetas.append(theta.theta)
        logger.info("%s epoch %d: feature gap %.4f", maneuver.value, epoch, gap)
        logger.debug(
            "%s epoch %d gradient: %s",
            maneuver.value,
            epoch,
            ", ".join(f"{n}={g:+.4f}" for n, g in zip(MANEUVER_FEATURES[maneuver], gradient)),
        )
        if best is None or gap < best[1]:
            best = (theta, gap)
        if gap <= cfg.grad_tol:
            converged = True
            break
        if epoch < cfg.max_epochs:
            eta = np.clip(
                eta + cfg.learning_rate * gradient * theta.as_array(), -ETA_LIMIT, ETA_LIMIT
            )

    if not converged:
        logger.warning(
            "%s weights did not reach gap %.3f in %d epochs (best %.4f)",
            maneuver.value,
            cfg.grad_tol,
            cfg.max_epochs,
            best[1],
        )
    return TrainResult(
        weights=best[0],
        scaling=scaling,
        summary=TrainingSummary(epochs=len(gaps) - 1, gap=best[1], converged=converged),
        gaps=tuple(gaps),
        thetas=tuple(thetas),
    )


def demonstration_windows(
    trajectory: Trajectory,
    env: EnvironmentState,
    horizon: int,
    stride: Optional[float] = None,
) -> List[Demonstration]:
    """
    Windows of `horizon` steps starting at the first yellow-phase sample.

    With `stride` (seconds) further windows start every `stride` while a full window remains.
    """
    starts = [i for i, point in enumerate(trajectory) if point.t >= env.yellow_onset - 1e-9]
    if not starts:
        return []
    first = starts[0]
    step = max(1, int(round(stride / trajectory.dt))) if stride else len(trajectory)
    return [
        Demonstration(
            trajectory=Trajectory(trajectory.points[i : i + horizon + 1], dt=trajectory.dt),
            env=env,
        )
        for i in range(first, len(trajectory) - horizon, step)
    ]


def demonstrations_from_records(
    records: Iterable["ScenarioRecord"],
    maneuver: Intention,
    horizon: int,
    stride: Optional[float] = None,
) -> List[Demonstration]:
    demos = []
    for record in records:
        if record.intention is maneuver:
            demos.extend(demonstration_windows(record.trajectory, record.env, horizon, stride))
    return demos
