"""
Trajectory optimizer for a fixed maneuver.

Minimizes the weighted, scaled feature cost over a bounded control sequence with projected
gradient descent from a few deterministic starting points. Gradients are central finite
differences evaluated as one batch, and the backtracking line search evaluates all of its
step halvings as one batch too.
"""

import logging
from typing import List, Optional, Tuple

import attr
import numpy as np

from . import Intention
from .core import (
    DEFAULT_TAU,
    ControlBounds,
    ControlSequence,
    EnvironmentState,
    Trajectory,
    TrajectoryPoint,
    rollout,
    rollout_arrays,
    sample_times,
)
from .errors import InfeasibleSceneException, ParameterException
from .features import (
    VEHICLE_LENGTH,
    FeatureScaling,
    FeatureVector,
    WeightVector,
    compute_features,
    feature_matrix,
)

logger = logging.getLogger(__name__)

# time constant of the speed-following starting point
FOLLOW_TIME_CONSTANT = 1.0


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class OptimizerConfig:
    horizon: int = 30
    tau: float = DEFAULT_TAU
    max_iters: int = 200
    grad_step: float = 1e-4
    tol: float = 1e-6
    restarts: int = 3
    max_halvings: int = 20
    initial_step: float = 1.0
    seed: int = 0
    bounds: ControlBounds = attr.Factory(ControlBounds)

    def __attrs_post_init__(self):
        if self.horizon < 1:
            raise ParameterException("horizon", "Must be at least one step.")
        if not self.tau > 0:
            raise ParameterException("tau", "Must be positive.")
        if self.max_iters < 0:
            raise ParameterException("max_iters", "Must be non-negative.")
        if not self.grad_step > 0:
            raise ParameterException("grad_step", "Must be positive.")
        if self.tol < 0:
            raise ParameterException("tol", "Must be non-negative.")
        if self.restarts < 1:
            raise ParameterException("restarts", "Need at least one start.")
        if self.max_halvings < 0:
            raise ParameterException("max_halvings", "Must be non-negative.")
        if not self.initial_step > 0:
            raise ParameterException("initial_step", "Must be positive.")


@attr.s(auto_attribs=True, frozen=True)
class OptimizationResult:
    trajectory: Trajectory
    controls: ControlSequence
    features: FeatureVector
    objective: float
    converged: bool
    iterations: int
    restart: int
    start_objectives: Tuple[float, ...]
    histories: Tuple[Tuple[float, ...], ...]


def _check_maneuvers(theta: WeightVector, scaling: FeatureScaling) -> None:
    if theta.maneuver is not scaling.maneuver:
        raise ParameterException(
            "scaling",
            f"Weights are for {theta.maneuver.value}, scaling for {scaling.maneuver.value}.",
        )


class CostModel:
    """Batched cost of control sequences applied from a fixed initial state."""

    def __init__(
        self,
        theta: WeightVector,
        env: EnvironmentState,
        initial: TrajectoryPoint,
        horizon: int,
        tau: float = DEFAULT_TAU,
        scaling: Optional[FeatureScaling] = None,
    ):
        scaling = scaling or FeatureScaling.unit(theta.maneuver)
        _check_maneuvers(theta, scaling)
        self.maneuver = theta.maneuver
        self.env = env
        self.initial = initial
        self.horizon = horizon
        self.tau = tau
        self.weights = theta.as_array() * scaling.as_array()
        self.times = sample_times(initial.t, horizon, tau)

    def states(self, u: np.ndarray):
        u = np.atleast_2d(u)
        accel, heading = u[:, : self.horizon], u[:, self.horizon :]
        x, y, v = rollout_arrays(
            self.initial.x, self.initial.y, self.initial.v, accel, heading, self.tau
        )
        rows = u.shape[0]
        a = np.concatenate([np.full((rows, 1), self.initial.a), accel], axis=1)
        psi = np.concatenate([np.full((rows, 1), self.initial.psi), heading], axis=1)
        return x, y, v, a, psi

    def features(self, u: np.ndarray) -> np.ndarray:
        return feature_matrix(self.times, *self.states(u), self.env, self.maneuver)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.features(u) @ self.weights


def objective(
    trajectory: Trajectory,
    theta: WeightVector,
    env: EnvironmentState,
    scaling: Optional[FeatureScaling] = None,
) -> float:
    scaling = scaling or FeatureScaling.unit(theta.maneuver)
    _check_maneuvers(theta, scaling)
    features = compute_features(trajectory, env, theta.maneuver)
    return float(scaling.apply(features.as_array()) @ theta.as_array())


def _starting_controls(cost: CostModel, cfg: OptimizerConfig) -> List[np.ndarray]:
    horizon, bounds, initial, env = cfg.horizon, cfg.bounds, cost.initial, cost.env
    no_heading = np.zeros(horizon)

    zero = np.zeros(2 * horizon)

    target = env.x_queue if cost.maneuver is Intention.STOP else env.stop_bar_x
    distance = max(target - initial.x, 0.5)
    brake = float(np.clip(-(initial.v**2) / (2 * distance), bounds.a_min, 0.0))
    braking = np.concatenate([np.full(horizon, brake), no_heading])

    front = env.front_at(cost.times)
    speeds = front[1] if front is not None else np.full(horizon + 1, env.v_lim)
    accel, v = [], initial.v
    for i in range(horizon):
        a = float(np.clip((speeds[i + 1] - v) / FOLLOW_TIME_CONSTANT, bounds.a_min, bounds.a_max))
        accel.append(a)
        v = max(0.0, v + a * cfg.tau)
    following = np.concatenate([accel, no_heading])

    starts = [zero, braking, following]
    rng = np.random.default_rng(cfg.seed)
    while len(starts) < cfg.restarts:
        starts.append(
            np.concatenate(
                [
                    rng.uniform(bounds.a_min, bounds.a_max, horizon),
                    rng.uniform(-bounds.psi_max, bounds.psi_max, horizon),
                ]
            )
        )
    return starts[: cfg.restarts]


@attr.s(auto_attribs=True)
class _Descent:
    u: np.ndarray
    objective: float
    converged: bool
    iterations: int
    history: List[float]


def _descend(
    cost: CostModel, start: np.ndarray, cfg: OptimizerConfig, tolerance: float
) -> _Descent:
    horizon, bounds = cfg.horizon, cfg.bounds
    lower = np.concatenate([np.full(horizon, bounds.a_min), np.full(horizon, -bounds.psi_max)])
    upper = np.concatenate([np.full(horizon, bounds.a_max), np.full(horizon, bounds.psi_max)])
    offsets = np.eye(2 * horizon) * cfg.grad_step
    halvings = 0.5 ** np.arange(cfg.max_halvings + 1)

    u = np.clip(start, lower, upper)
    f = float(cost(u)[0])
    history = [f]
    step = cfg.initial_step
    for iteration in range(cfg.max_iters):
        values = cost(np.concatenate([u + offsets, u - offsets]))
        gradient = (values[: 2 * horizon] - values[2 * horizon :]) / (2 * cfg.grad_step)
        magnitude = np.max(np.abs(gradient))
        if magnitude == 0 or not np.isfinite(magnitude):
            return _Descent(u, f, True, iteration, history)

        direction = gradient / magnitude
        trials = np.clip(u - (step * halvings)[:, None] * direction, lower, upper)
        trial_values = cost(trials)
        improved = np.flatnonzero(trial_values < f)
        if improved.size == 0:
            return _Descent(u, f, True, iteration, history)

        k = improved[0]
        decrease = f - float(trial_values[k])
        u, f = trials[k], float(trial_values[k])
        history.append(f)
        step = min(cfg.initial_step, 2 * step * halvings[k])
        if decrease <= tolerance:
            return _Descent(u, f, True, iteration + 1, history)
    return _Descent(u, f, False, cfg.max_iters, history)


def optimize_trajectory(
    theta: WeightVector,
    env: EnvironmentState,
    initial: TrajectoryPoint,
    cfg: Optional[OptimizerConfig] = None,
    scaling: Optional[FeatureScaling] = None,
) -> OptimizationResult:
    """
    Lowest-cost feasible trajectory of `cfg.horizon` steps starting at `initial`.

    Every start is descended independently and the lowest final objective wins, ties going to
    the earlier start. Running out of iterations is reported through `converged`.
    """
    cfg = cfg or OptimizerConfig()
    front = env.front_at([initial.t])
    if front is not None and front[0][0] - initial.x - VEHICLE_LENGTH <= 0:
        raise InfeasibleSceneException(initial)

    cost = CostModel(theta, env, initial, cfg.horizon, cfg.tau, scaling)
    # scales with theta
    tolerance = cfg.tol * float(np.sum(theta.as_array()))
    runs = [_descend(cost, start, cfg, tolerance) for start in _starting_controls(cost, cfg)]
    best = min(range(len(runs)), key=lambda i: (runs[i].objective, i))
    run = runs[best]
    if not run.converged:
        logger.debug("Optimizer stopped after %d iterations without converging", run.iterations)

    controls = ControlSequence.from_array(run.u, cfg.bounds)
    return OptimizationResult(
        trajectory=rollout(initial, controls, cfg.tau),
        controls=controls,
        features=FeatureVector(maneuver=theta.maneuver, values=cost.features(run.u)[0]),
        objective=run.objective,
        converged=run.converged,
        iterations=run.iterations,
        restart=best,
        start_objectives=tuple(r.history[0] for r in runs),
        histories=tuple(tuple(r.history) for r in runs),
    )
