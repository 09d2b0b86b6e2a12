"""
Trajectory value types, the discrete kinematic model and trajectory CSV ingestion.

Positions are metres along the approach (x grows toward and through the stop bar),
speeds m/s, accelerations m/s^2, headings radians and times seconds.
"""

import logging
import math
from functools import cached_property
from os import PathLike
from typing import Dict, Iterator, Mapping, Optional, Tuple, Union

import attr
import numpy as np
import pandas as pd

from .errors import (
    ImplausibleSpeedException,
    IngestionException,
    InvalidEnvironmentException,
    InvalidStateException,
    MissingColumnException,
    NonFiniteRowException,
    ParameterException,
    ShapeException,
    UnsortedTimestampsException,
    ValidationException,
)
from .util import atomic_write

logger = logging.getLogger(__name__)

DEFAULT_TAU = 0.1
TIME_TOLERANCE = 1e-9
MAX_SPEED = 60.0
CSV_COLUMNS = ["vehicle_id", "t", "x", "y", "v", "a", "psi"]


def _float_tuple(values) -> Tuple[float, ...]:
    return tuple(float(v) for v in values)


def _check_tau(tau: float) -> None:
    if not (math.isfinite(tau) and tau > 0):
        raise ParameterException("tau", f"Step length must be positive, got {tau}.")


@attr.s(auto_attribs=True, frozen=True, slots=True)
class TrajectoryPoint:
    t: float = attr.ib(converter=float)
    x: float = attr.ib(converter=float)
    y: float = attr.ib(converter=float)
    v: float = attr.ib(converter=float)
    a: float = attr.ib(default=0.0, converter=float)
    psi: float = attr.ib(default=0.0, converter=float)

    def __attrs_post_init__(self):
        if not all(math.isfinite(value) for value in attr.astuple(self)):
            raise InvalidStateException(self, "Non-finite value.")
        if self.v < 0:
            raise InvalidStateException(self, "Speed must be non-negative.")
        if abs(self.psi) > math.pi / 2:
            raise InvalidStateException(self, "Heading must lie within [-pi/2, pi/2].")


@attr.s(auto_attribs=True, frozen=True, slots=True)
class ControlBounds:
    a_min: float = -4.0
    a_max: float = 3.0
    psi_max: float = 0.2

    def __attrs_post_init__(self):
        if not self.a_min < self.a_max:
            raise ParameterException("bounds", "a_min must be below a_max.")
        if not 0 < self.psi_max <= math.pi / 2:
            raise ParameterException("bounds", "psi_max must lie in (0, pi/2].")

    def clip(self, accel: np.ndarray, heading: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return (
            np.clip(accel, self.a_min, self.a_max),
            np.clip(heading, -self.psi_max, self.psi_max),
        )

    def contains(self, accel, heading) -> bool:
        accel = np.asarray(accel, dtype=float)
        heading = np.asarray(heading, dtype=float)
        return bool(
            np.all(accel >= self.a_min)
            and np.all(accel <= self.a_max)
            and np.all(np.abs(heading) <= self.psi_max)
        )


@attr.s(auto_attribs=True, frozen=True)
class ControlSequence:
    """Per-step longitudinal acceleration and heading commands."""

    a: Tuple[float, ...] = attr.ib(converter=_float_tuple)
    psi: Tuple[float, ...] = attr.ib(converter=_float_tuple)
    bounds: ControlBounds = attr.Factory(ControlBounds)

    def __attrs_post_init__(self):
        if len(self.a) != len(self.psi):
            raise ShapeException("controls", "Acceleration and heading lengths differ.")
        if not self.a:
            raise ShapeException("controls", "Control sequence is empty.")
        if not all(math.isfinite(value) for value in self.a + self.psi):
            raise ParameterException("controls", "Non-finite control value.")
        if not self.bounds.contains(self.a, self.psi):
            raise ParameterException("controls", f"Controls fall outside {self.bounds}.")

    def __len__(self) -> int:
        return len(self.a)

    @classmethod
    def zeros(cls, horizon: int, bounds: Optional[ControlBounds] = None) -> "ControlSequence":
        return cls(a=[0.0] * horizon, psi=[0.0] * horizon, bounds=bounds or ControlBounds())

    @classmethod
    def from_array(cls, u: np.ndarray, bounds: ControlBounds) -> "ControlSequence":
        """Build from the stacked `[a_0..a_{N-1}, psi_0..psi_{N-1}]` decision vector."""
        horizon = len(u) // 2
        return cls(a=u[:horizon], psi=u[horizon:], bounds=bounds)

    def as_array(self) -> np.ndarray:
        return np.array(self.a + self.psi)


@attr.s(auto_attribs=True, frozen=True)
class Trajectory:
    """Uniformly sampled sequence of trajectory points."""

    points: Tuple[TrajectoryPoint, ...] = attr.ib(converter=tuple)
    dt: float = attr.ib(default=DEFAULT_TAU, converter=float)

    def __attrs_post_init__(self):
        if not self.points:
            raise ShapeException("trajectory", "Trajectory needs at least one point.")
        _check_tau(self.dt)
        steps = np.diff([p.t for p in self.points])
        if steps.size and np.any(np.abs(steps - self.dt) > TIME_TOLERANCE):
            raise InvalidStateException(
                "trajectory", f"Timestamps must advance by exactly dt={self.dt}."
            )

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[TrajectoryPoint]:
        return iter(self.points)

    def __getitem__(self, index: int) -> TrajectoryPoint:
        return self.points[index]

    @cached_property
    def t(self) -> np.ndarray:
        return np.array([p.t for p in self.points])

    @cached_property
    def x(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @cached_property
    def y(self) -> np.ndarray:
        return np.array([p.y for p in self.points])

    @cached_property
    def v(self) -> np.ndarray:
        return np.array([p.v for p in self.points])

    @cached_property
    def a(self) -> np.ndarray:
        return np.array([p.a for p in self.points])

    @cached_property
    def psi(self) -> np.ndarray:
        return np.array([p.psi for p in self.points])

    @property
    def start(self) -> TrajectoryPoint:
        return self.points[0]

    @property
    def end(self) -> TrajectoryPoint:
        return self.points[-1]

    @classmethod
    def from_arrays(cls, t, x, y, v, a, psi, dt: float = DEFAULT_TAU) -> "Trajectory":
        return cls(
            points=[TrajectoryPoint(*values) for values in zip(t, x, y, v, a, psi)], dt=dt
        )

    def truncate(self, count: int) -> "Trajectory":
        if count < 1:
            raise ShapeException("trajectory", "Cannot truncate to fewer than one point.")
        return Trajectory(self.points[:count], dt=self.dt)

    def shift_time(self, delta: float) -> "Trajectory":
        return Trajectory([attr.evolve(p, t=p.t + delta) for p in self.points], dt=self.dt)

    def index_at(self, t: float, tolerance: float = 1e-6) -> Optional[int]:
        """Index of the sample taken at time `t`, if there is one."""
        index = int(round((t - self.points[0].t) / self.dt))
        if 0 <= index < len(self.points) and abs(self.points[index].t - t) <= tolerance:
            return index
        return None

    def slice_from(self, t: float, count: int) -> Optional["Trajectory"]:
        """Up to `count` samples starting at time `t`."""
        index = self.index_at(t)
        if index is None:
            return None
        return Trajectory(self.points[index : index + count], dt=self.dt)

    def to_frame(self, vehicle_id: str = "") -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "t": self.t,
                "x": self.x,
                "y": self.y,
                "v": self.v,
                "a": self.a,
                "psi": self.psi,
            }
        )
        frame.insert(0, "vehicle_id", vehicle_id)
        return frame


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class EnvironmentState:
    """Signal timing, road geometry and the front vehicle for one approach."""

    yellow_onset: float = attr.ib(converter=float)
    yellow_duration: float = attr.ib(converter=float)
    stop_bar_x: float = attr.ib(converter=float)
    v_lim: float = attr.ib(converter=float)
    x_queue: float = attr.ib(converter=float)
    # steps of DEFAULT_TAU after yellow onset at which a standing queue starts to move
    i_launch: int = attr.ib(converter=int)
    fv_trajectory: Optional[Trajectory] = None
    a_max_naive: float = attr.ib(default=2.0, converter=float)

    def __attrs_post_init__(self):
        for name in ("yellow_onset", "yellow_duration", "stop_bar_x", "v_lim", "x_queue"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidEnvironmentException(name, "Value must be finite.")
        if self.yellow_duration <= 0:
            raise InvalidEnvironmentException("yellow_duration", "Must be positive.")
        if self.v_lim <= 0:
            raise InvalidEnvironmentException("v_lim", "Must be positive.")
        if self.x_queue > self.stop_bar_x:
            raise InvalidEnvironmentException("x_queue", "Queue position lies past the stop bar.")
        if self.i_launch < 0:
            raise InvalidEnvironmentException("i_launch", "Must be non-negative.")

    @property
    def yellow_end(self) -> float:
        return self.yellow_onset + self.yellow_duration

    @property
    def launch_time(self) -> float:
        return self.yellow_onset + self.i_launch * DEFAULT_TAU

    def in_yellow(self, t: float) -> bool:
        return self.yellow_onset - TIME_TOLERANCE <= t <= self.yellow_end + TIME_TOLERANCE

    def front_at(self, times) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Front-vehicle position and speed at `times`, extrapolated at constant speed."""
        fv = self.fv_trajectory
        if fv is None:
            return None
        times = np.asarray(times, dtype=float)
        x = np.interp(times, fv.t, fv.x)
        x = np.where(times > fv.t[-1], fv.x[-1] + fv.v[-1] * (times - fv.t[-1]), x)
        x = np.where(times < fv.t[0], fv.x[0] - fv.v[0] * (fv.t[0] - times), x)
        return x, np.interp(times, fv.t, fv.v)


def sample_times(t0: float, steps: int, tau: float) -> np.ndarray:
    return np.cumsum(np.concatenate(([t0], np.full(steps, tau))))


def rollout_arrays(x0, y0, v0, accel, heading, tau: float):
    """
    Batched kinematic rollout.

    `accel` and `heading` have shape (rows, steps); the returned x, y and v arrays have shape
    (rows, steps + 1) with the initial state in column 0.
    """
    accel = np.atleast_2d(np.asarray(accel, dtype=float))
    heading = np.atleast_2d(np.asarray(heading, dtype=float))
    rows, steps = accel.shape
    x = np.empty((rows, steps + 1))
    y = np.empty((rows, steps + 1))
    v = np.empty((rows, steps + 1))
    x[:, 0], y[:, 0], v[:, 0] = x0, y0, v0
    cos, sin = np.cos(heading), np.sin(heading)
    for i in range(steps):
        advance = v[:, i] * tau
        x[:, i + 1] = x[:, i] + advance * cos[:, i]
        y[:, i + 1] = y[:, i] + advance * sin[:, i]
        v[:, i + 1] = np.maximum(0.0, v[:, i] + accel[:, i] * tau)
    return x, y, v


def kinematic_step(
    point: TrajectoryPoint,
    a: float,
    psi: float,
    tau: float = DEFAULT_TAU,
    bounds: Optional[ControlBounds] = None,
) -> TrajectoryPoint:
    _check_tau(tau)
    if not (math.isfinite(a) and math.isfinite(psi)):
        raise ParameterException("controls", "Non-finite control value.")
    if bounds is not None and not bounds.contains(a, psi):
        raise ParameterException("controls", f"Controls fall outside {bounds}.")
    x, y, v = rollout_arrays(point.x, point.y, point.v, [[a]], [[psi]], tau)
    return TrajectoryPoint(t=point.t + tau, x=x[0, 1], y=y[0, 1], v=v[0, 1], a=a, psi=psi)


def rollout(
    initial: TrajectoryPoint, controls: ControlSequence, tau: float = DEFAULT_TAU
) -> Trajectory:
    _check_tau(tau)
    accel = np.array(controls.a)
    heading = np.array(controls.psi)
    x, y, v = rollout_arrays(initial.x, initial.y, initial.v, accel[None], heading[None], tau)
    times = sample_times(initial.t, len(controls), tau)
    points = [initial] + [
        TrajectoryPoint(
            t=times[i + 1], x=x[0, i + 1], y=y[0, i + 1], v=v[0, i + 1], a=accel[i], psi=heading[i]
        )
        for i in range(len(controls))
    ]
    return Trajectory(points, dt=tau)


def euclidean_distance(first: Trajectory, second: Trajectory) -> float:
    """Mean point-wise planar distance between two equally long trajectories."""
    if len(first) != len(second):
        raise ShapeException("trajectories", f"Lengths {len(first)} and {len(second)} differ.")
    return float(np.mean(np.hypot(first.x - second.x, first.y - second.y)))


def overlap_distance(prediction: Trajectory, truth: Trajectory) -> Optional[float]:
    """
    Mean planar error of a prediction against the samples that actually happened.

    Only predicted points after the first (the observed state) that have a truth sample at the
    same time are compared; None when there is no such point.
    """
    errors = []
    for point in prediction.points[1:]:
        index = truth.index_at(point.t)
        if index is None:
            continue
        actual = truth[index]
        errors.append(math.hypot(point.x - actual.x, point.y - actual.y))
    return float(np.mean(errors)) if errors else None


def _resample_arrays(t, x, y, v, a, psi, tau: float) -> Trajectory:
    span = t[-1] - t[0]
    if span + TIME_TOLERANCE < tau:
        raise ParameterException("tau", "Trajectory is shorter than one output step.")
    if np.all(np.abs(np.diff(t) - tau) <= TIME_TOLERANCE):
        return Trajectory.from_arrays(t, x, y, v, a, psi, dt=tau)
    count = int(math.floor(span / tau + TIME_TOLERANCE)) + 1
    grid = t[0] + tau * np.arange(count)
    speed = np.interp(grid, t, v)
    return Trajectory.from_arrays(
        grid,
        np.interp(grid, t, x),
        np.interp(grid, t, y),
        speed,
        np.gradient(speed, tau),
        np.interp(grid, t, psi),
        dt=tau,
    )


def resample_trajectory(trajectory: Trajectory, tau: float = DEFAULT_TAU) -> Trajectory:
    """
    Resample onto a uniform grid of step `tau` starting at the first sample.

    Position, speed and heading are linearly interpolated and acceleration is recomputed from
    speed by finite differences. Resampling onto the existing grid returns the samples unchanged.
    """
    _check_tau(tau)
    return _resample_arrays(
        trajectory.t,
        trajectory.x,
        trajectory.y,
        trajectory.v,
        trajectory.a,
        trajectory.psi,
        tau,
    )


def read_trajectories_csv(
    path: Union[str, PathLike], tau: float = DEFAULT_TAU
) -> Dict[str, Trajectory]:
    """Load `vehicle_id,t,x,y,v,a,psi` rows (SI units) and resample every vehicle to `tau`."""
    try:
        frame = pd.read_csv(path, dtype={"vehicle_id": str}, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestionException(path, str(e)) from e

    for column in CSV_COLUMNS:
        if column not in frame.columns:
            raise MissingColumnException(path, column)

    numeric = frame[CSV_COLUMNS[1:]].apply(pd.to_numeric, errors="coerce")
    # row numbers as a spreadsheet shows them: the header is row 1
    row_numbers = np.arange(len(frame)) + 2
    non_finite = ~np.isfinite(numeric.to_numpy(dtype=float)).all(axis=1)
    if non_finite.any():
        raise NonFiniteRowException(path, row_numbers[non_finite])
    implausible = ((numeric["v"] < 0) | (numeric["v"] > MAX_SPEED)).to_numpy()
    if implausible.any():
        raise ImplausibleSpeedException(path, row_numbers[implausible])

    trajectories = {}
    positions = pd.Series(np.arange(len(frame)), index=frame.index)
    for vehicle_id, group in numeric.groupby(frame["vehicle_id"].fillna(""), sort=False):
        rows = row_numbers[positions[group.index].to_numpy()]
        times = group["t"].to_numpy()
        unsorted = np.diff(times) <= 0
        if unsorted.any():
            raise UnsortedTimestampsException(path, rows[1:][unsorted])
        if len(group) < 2:
            raise IngestionException(path, f"vehicle {vehicle_id} has fewer than two samples")
        try:
            trajectories[str(vehicle_id)] = _resample_arrays(
                times,
                group["x"].to_numpy(),
                group["y"].to_numpy(),
                group["v"].to_numpy(),
                group["a"].to_numpy(),
                group["psi"].to_numpy(),
                tau,
            )
        except ValidationException as e:
            raise IngestionException(path, f"vehicle {vehicle_id}: {e}") from e
    logger.info("Read %d trajectories from %s", len(trajectories), path)
    return trajectories


def write_trajectories_csv(
    path: Union[str, PathLike], trajectories: Mapping[str, Trajectory]
) -> None:
    frame = pd.concat(
        [trajectory.to_frame(vehicle_id) for vehicle_id, trajectory in trajectories.items()],
        ignore_index=True,
    )
    with atomic_write(path) as f:
        frame.to_csv(f, index=False, columns=CSV_COLUMNS)

