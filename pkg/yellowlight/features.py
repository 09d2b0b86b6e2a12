"""
Trajectory features for the pass and stop maneuvers.

Pass trajectories are scored on speed-limit tracking, acceleration, car following, heading
and lateral acceleration; stop trajectories swap speed-limit tracking for closeness to the
queue position before the queue launches.
"""

import math
from typing import Dict, Sequence, Tuple

import attr
import numpy as np

from . import Intention
from .core import TIME_TOLERANCE, EnvironmentState, Trajectory
from .errors import InfeasibleSceneException, ParameterException, ShapeException

FEATURE_NAMES = (
    "speed_limit",
    "acceleration",
    "car_following",
    "heading",
    "lateral_acceleration",
    "stop_position",
)

MANEUVER_FEATURES: Dict[Intention, Tuple[str, ...]] = {
    Intention.PASS: FEATURE_NAMES[:5],
    Intention.STOP: FEATURE_NAMES[1:],
}

# feature scaled by 2*lambda; acceleration is scaled by 2*(1 - lambda)
EFFICIENCY_FEATURE = {Intention.PASS: "speed_limit", Intention.STOP: "stop_position"}

V_MIN = 1.0
VEHICLE_LENGTH = 4.5
# gap floor used while searching; exact feature evaluation rejects overlaps instead
MIN_GAP = 0.1


def _float_tuple(values) -> Tuple[float, ...]:
    return tuple(float(v) for v in values)


def _validate_row(what: str, values: Tuple[float, ...], allow_zero: bool = True) -> None:
    if len(values) != len(FEATURE_NAMES) - 1:
        raise ShapeException(what, f"Expected 5 entries, got {len(values)}.")
    if not all(math.isfinite(v) for v in values):
        raise ParameterException(what, "Entries must be finite.")
    if any(v < 0 or (v == 0 and not allow_zero) for v in values):
        raise ParameterException(what, "Entries must be non-negative.")


@attr.s(auto_attribs=True, frozen=True)
class FeatureVector:
    maneuver: Intention
    values: Tuple[float, ...] = attr.ib(converter=_float_tuple)

    def __attrs_post_init__(self):
        _validate_row("features", self.values)

    @property
    def names(self) -> Tuple[str, ...]:
        return MANEUVER_FEATURES[self.maneuver]

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]


@attr.s(auto_attribs=True, frozen=True)
class FeatureScaling:
    maneuver: Intention
    scale: Tuple[float, ...] = attr.ib(converter=_float_tuple)

    def __attrs_post_init__(self):
        _validate_row("scaling", self.scale, allow_zero=False)

    @classmethod
    def unit(cls, maneuver: Intention) -> "FeatureScaling":
        return cls(maneuver=maneuver, scale=[1.0] * 5)

    def as_array(self) -> np.ndarray:
        return np.array(self.scale)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.as_array()


@attr.s(auto_attribs=True, frozen=True)
class WeightVector:
    maneuver: Intention
    theta: Tuple[float, ...] = attr.ib(converter=_float_tuple)

    def __attrs_post_init__(self):
        _validate_row("theta", self.theta)

    @classmethod
    def ones(cls, maneuver: Intention) -> "WeightVector":
        return cls(maneuver=maneuver, theta=[1.0] * 5)

    def as_array(self) -> np.ndarray:
        return np.array(self.theta)

    def __getitem__(self, name: str) -> float:
        return self.theta[MANEUVER_FEATURES[self.maneuver].index(name)]


def feature_matrix(
    t: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    v: np.ndarray,
    a: np.ndarray,
    psi: np.ndarray,
    env: EnvironmentState,
    maneuver: Intention,
    strict: bool = False,
) -> np.ndarray:
    """
    Raw features for a batch of equally timed trajectories.

    `t` has shape (points,), the state arrays (rows, points). Returns (rows, 5) in the
    maneuver's feature order. With `strict`, a non-positive gap to the front vehicle raises;
    otherwise gaps are floored at MIN_GAP so a search can keep comparing candidates.
    """
    x, y, v, a, psi = (np.atleast_2d(np.asarray(arr, dtype=float)) for arr in (x, y, v, a, psi))
    t = np.asarray(t, dtype=float)

    acceleration = np.mean(a**2, axis=1)
    heading = np.mean(psi**2, axis=1)
    lateral = np.mean((a * np.sin(psi)) ** 2, axis=1)

    front = env.front_at(t)
    if front is None:
        following = np.zeros(x.shape[0])
    else:
        gap = front[0] - x - VEHICLE_LENGTH
        if strict:
            if np.any(gap <= 0):
                raise InfeasibleSceneException("trajectory", "Gap to the front vehicle <= 0.")
        else:
            gap = np.maximum(gap, MIN_GAP)
        headway = np.where(v > V_MIN, gap / np.maximum(v, V_MIN), gap)
        following = np.mean(1.0 / headway**2, axis=1)

    if maneuver is Intention.PASS:
        speed = np.mean((v - env.v_lim) ** 2, axis=1)
        columns = [speed, acceleration, following, heading, lateral]
    else:
        before_launch = t <= env.launch_time + TIME_TOLERANCE
        if before_launch.any():
            stop = np.mean((x[:, before_launch] - env.x_queue) ** 2, axis=1)
        else:
            stop = np.zeros(x.shape[0])
        columns = [acceleration, following, heading, lateral, stop]
    return np.stack(columns, axis=1)


def compute_features(
    trajectory: Trajectory, env: EnvironmentState, maneuver: Intention
) -> FeatureVector:
    values = feature_matrix(
        trajectory.t,
        trajectory.x,
        trajectory.y,
        trajectory.v,
        trajectory.a,
        trajectory.psi,
        env,
        maneuver,
        strict=True,
    )[0]
    return FeatureVector(maneuver=maneuver, values=values)


def fit_scaling(vectors: Sequence[FeatureVector]) -> FeatureScaling:
    """Per-feature scale making every non-degenerate feature average one over `vectors`."""
    if not vectors:
        raise ParameterException("features", "Cannot fit a scaling to an empty set.")
    maneuvers = {vector.maneuver for vector in vectors}
    if len(maneuvers) != 1:
        raise ParameterException("features", "Feature vectors mix maneuvers.")
    means = np.mean([vector.as_array() for vector in vectors], axis=0)
    scale = np.where(means > 0, 1.0 / np.where(means > 0, means, 1.0), 1.0)
    return FeatureScaling(maneuver=maneuvers.pop(), scale=scale)


def apply_lambda(theta: WeightVector, lam: float) -> WeightVector:
    """Trade the efficiency feature against acceleration; lambda = 0.5 is the identity."""
    if not (math.isfinite(lam) and 0.0 <= lam <= 1.0):
        raise ParameterException("lambda", f"Driver characteristic must lie in [0, 1], got {lam}.")
    names = MANEUVER_FEATURES[theta.maneuver]
    values = list(theta.theta)
    efficiency = names.index(EFFICIENCY_FEATURE[theta.maneuver])
    acceleration = names.index("acceleration")
    values[efficiency] = (2.0 * lam) * values[efficiency]
    values[acceleration] = (2.0 * (1.0 - lam)) * values[acceleration]
    return WeightVector(maneuver=theta.maneuver, theta=values)
