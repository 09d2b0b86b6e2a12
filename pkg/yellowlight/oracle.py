"""
Brute-force checks of the exact parts of the predictor on instances small enough to enumerate.
"""

import itertools
import logging
from typing import Callable, Dict, List, Optional

import attr
import numpy as np

from . import Intention
from .core import ControlBounds, ControlSequence, EnvironmentState, TrajectoryPoint, rollout
from .features import FeatureScaling, WeightVector, compute_features, fit_scaling
from .intention import (
    CE_VARIABLES,
    DE_VARIABLES,
    EVIDENCE_VARIABLES,
    BnModel,
    IntentionEvidence,
    infer_intention,
)
from .irl import (
    Demonstration,
    exact_likelihood_gradient,
    log_likelihood,
    softmin_probabilities,
)
from .trajopt import CostModel, OptimizerConfig, optimize_trajectory

logger = logging.getLogger(__name__)


@attr.s(auto_attribs=True, frozen=True)
class OracleResult:
    name: str
    passed: bool
    value: float
    tolerance: float

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (tolerance {self.tolerance:.0e})"


def _result(name: str, value: float, tolerance: float) -> OracleResult:
    result = OracleResult(name, bool(value <= tolerance), float(value), tolerance)
    log = logger.info if result.passed else logger.error
    log("%s", result)
    return result


def _random_bn(rng: np.random.Generator, k: int) -> BnModel:
    edges = {
        name: tuple(float(e) for e in np.sort(rng.choice(99, k - 1, replace=False) + 1))
        for name in EVIDENCE_VARIABLES
    }
    rows = rng.dirichlet(np.ones(2), size=k ** len(CE_VARIABLES))
    return BnModel(
        k_bins=k,
        alpha=1.0,
        bin_edges=edges,
        cpt_intention=tuple((float(p), float(s)) for p, s in rows),
        cpt_de={
            name: tuple(tuple(float(p) for p in rng.dirichlet(np.ones(k))) for _ in range(2))
            for name in DE_VARIABLES
        },
    )


def _joint_posterior(model: BnModel, evidence: IntentionEvidence) -> np.ndarray:
    """P(intention | evidence) by summing the full joint table over matching assignments."""
    k = model.k_bins
    observed = [
        int(np.digitize(getattr(evidence, name), model.bin_edges[name]))
        for name in EVIDENCE_VARIABLES
    ]
    totals = np.zeros(2)
    for assignment in itertools.product(range(k), repeat=len(EVIDENCE_VARIABLES)):
        if list(assignment) != observed:
            continue
        ce, de = assignment[: len(CE_VARIABLES)], assignment[len(CE_VARIABLES) :]
        row = int(np.ravel_multi_index(ce, (k,) * len(CE_VARIABLES)))
        for intention in Intention:
            p = model.cpt_intention[row][intention.index] / k ** len(CE_VARIABLES)
            for name, bin_index in zip(DE_VARIABLES, de):
                p *= model.cpt_de[name][intention.index][bin_index]
            totals[intention.index] += p
    return totals / totals.sum()


def bn_oracle(n_models: int = 100, seed: int = 0) -> OracleResult:
    """Inference against joint-table normalization on random small networks."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_models):
        model = _random_bn(rng, int(rng.integers(2, 4)))
        evidence = IntentionEvidence(
            **{name: float(rng.uniform(-10, 110)) for name in EVIDENCE_VARIABLES}
        )
        posterior = infer_intention(model, evidence)
        expected = _joint_posterior(model, evidence)
        worst = max(
            worst,
            abs(posterior.p_pass - expected[Intention.PASS.index]),
            abs(posterior.p_stop - expected[Intention.STOP.index]),
        )
    return _result("bn_joint_table", worst, 1e-12)


def maxent_normalization_oracle(seed: int = 0, n_sets: int = 100) -> OracleResult:
    """Candidate probabilities sum to one for costs spread over three orders of magnitude."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_sets):
        costs = rng.uniform(0.0, 1e3, size=int(rng.integers(2, 50)))
        worst = max(worst, abs(float(np.sum(softmin_probabilities(costs))) - 1.0))
    return _result("maxent_normalization", worst, 1e-12)


def _toy_candidates(initial: TrajectoryPoint) -> List:
    levels = (-2.0, 0.0, 2.0)
    return [
        rollout(initial, ControlSequence(a=accel, psi=[0.0] * 3))
        for accel in itertools.product(levels, repeat=3)
    ]


def gradient_oracle(seed: int = 0, step: float = 1e-5) -> OracleResult:
    """Enumerated likelihood gradient against central differences of the log-likelihood."""
    rng = np.random.default_rng(seed)
    env = EnvironmentState(
        yellow_onset=0.0,
        yellow_duration=3.5,
        stop_bar_x=100.0,
        v_lim=12.0,
        x_queue=95.0,
        i_launch=300,
    )
    demos, candidate_sets = [], []
    for _ in range(2):
        initial = TrajectoryPoint(t=0.0, x=rng.uniform(40, 60), y=0.0, v=rng.uniform(8, 12))
        candidates = _toy_candidates(initial)
        demos.append(Demonstration(candidates[int(rng.integers(len(candidates)))], env))
        candidate_sets.append(candidates)

    maneuver = Intention.PASS
    scaling = fit_scaling(
        [compute_features(c, env, maneuver) for candidates in candidate_sets for c in candidates]
    )
    theta = rng.uniform(0.5, 2.0, size=5)
    exact = exact_likelihood_gradient(
        WeightVector(maneuver, theta), demos, candidate_sets, scaling
    )

    def likelihood(values: np.ndarray) -> float:
        return log_likelihood(WeightVector(maneuver, values), demos, candidate_sets, scaling)

    numeric = np.zeros(5)
    for i in range(5):
        offset = np.zeros(5)
        offset[i] = step
        numeric[i] = (likelihood(theta + offset) - likelihood(theta - offset)) / (2 * step)
    error = float(np.max(np.abs(exact - numeric)) / max(np.max(np.abs(exact)), 1e-12))
    return _result("likelihood_gradient", error, 1e-4)


def optimizer_grid_oracle(
    levels: int = 71, bounds: Optional[ControlBounds] = None
) -> OracleResult:
    """Two-step optimizer result is no worse than the best straight-heading grid point."""
    env = EnvironmentState(
        yellow_onset=0.0,
        yellow_duration=3.5,
        stop_bar_x=100.0,
        v_lim=11.0,
        x_queue=95.0,
        i_launch=300,
    )
    initial = TrajectoryPoint(t=0.0, x=50.0, y=0.0, v=10.0)
    theta = WeightVector.ones(Intention.PASS)
    # run until no step halving improves
    cfg = OptimizerConfig(
        horizon=2, tol=0.0, max_iters=1000, max_halvings=40, bounds=bounds or ControlBounds()
    )
    scaling = FeatureScaling.unit(Intention.PASS)
    grid = np.linspace(cfg.bounds.a_min, cfg.bounds.a_max, levels)
    u = np.array([[a0, a1, 0.0, 0.0] for a0, a1 in itertools.product(grid, grid)])
    grid_best = float(np.min(CostModel(theta, env, initial, 2, cfg.tau, scaling)(u)))
    result = optimize_trajectory(theta, env, initial, cfg, scaling)
    return _result("optimizer_grid", max(0.0, result.objective - grid_best), 1e-9)


ORACLES: Dict[str, Callable[[int, ControlBounds], OracleResult]] = {
    "bn": lambda seed, bounds: bn_oracle(seed=seed),
    "maxent": lambda seed, bounds: maxent_normalization_oracle(seed=seed),
    "gradient": lambda seed, bounds: gradient_oracle(seed=seed),
    "optimizer": lambda seed, bounds: optimizer_grid_oracle(bounds=bounds),
}


def run_oracles(seed: int = 0, bounds: Optional[ControlBounds] = None) -> List[OracleResult]:
    bounds = bounds or ControlBounds()
    return [oracle(seed, bounds) for oracle in ORACLES.values()]
