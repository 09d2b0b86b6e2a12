"""
Bayesian-network intention model.

Causal evidence (elapsed yellow time, time to intersection, speed relative to the front vehicle)
feeds the prior on the intention; diagnostic evidence (longitudinal speed and acceleration)
depends on it. Every variable is discretized into equal-frequency bins learned from data, so
inference is an exact sum over two intention states.
"""

import json
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import attr
import cattr
import numpy as np

from . import Intention
from .core import TIME_TOLERANCE, EnvironmentState, Trajectory, TrajectoryPoint
from .errors import (
    CoverageException,
    DegenerateDataException,
    InvalidEvidenceException,
    ParameterException,
    PhaseException,
    ShapeException,
)
from .util import structure

logger = logging.getLogger(__name__)

CE_VARIABLES = ("elapsed_yellow", "tti", "rel_speed")
DE_VARIABLES = ("lon_speed", "lon_accel")
EVIDENCE_VARIABLES = CE_VARIABLES + DE_VARIABLES

TTI_CAP = 30.0
TTI_SPEED_FLOOR = 0.1
DEFAULT_BINS = 5
DEFAULT_ALPHA = 1.0
DEFAULT_D_LABEL = 3.0
POSTERIOR_TOLERANCE = 1e-9


def _finite(instance, attribute, value):
    if not math.isfinite(value):
        raise InvalidEvidenceException(attribute.name)


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class IntentionEvidence:
    elapsed_yellow: float = attr.ib(converter=float, validator=_finite)
    tti: float = attr.ib(converter=float, validator=_finite)
    rel_speed: float = attr.ib(converter=float, validator=_finite)
    lon_speed: float = attr.ib(converter=float, validator=_finite)
    lon_accel: float = attr.ib(converter=float, validator=_finite)

    def values(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in EVIDENCE_VARIABLES)


@attr.s(auto_attribs=True, frozen=True)
class IntentionPosterior:
    p_pass: float = attr.ib(converter=float)
    p_stop: float = attr.ib(converter=float)

    def __attrs_post_init__(self):
        if not (self.p_pass >= 0 and self.p_stop >= 0):
            raise ParameterException("posterior", "Probabilities must be non-negative.")
        if abs(self.p_pass + self.p_stop - 1.0) > POSTERIOR_TOLERANCE:
            raise ParameterException("posterior", "Probabilities must sum to one.")

    @property
    def maneuver(self) -> Intention:
        """Most probable intention; a tie counts as stop."""
        return Intention.PASS if self.p_pass > self.p_stop else Intention.STOP


_converter = cattr.Converter()


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class BnModel:
    k_bins: int
    alpha: float
    bin_edges: Dict[str, Tuple[float, ...]]
    # one (P(pass), P(stop)) row per causal-evidence bin triple, row-major
    cpt_intention: Tuple[Tuple[float, float], ...]
    # per diagnostic variable: (P(bin | pass), P(bin | stop))
    cpt_de: Dict[str, Tuple[Tuple[float, ...], Tuple[float, ...]]]

    def __attrs_post_init__(self):
        k = self.k_bins
        if set(self.bin_edges) != set(EVIDENCE_VARIABLES):
            raise ShapeException("bin_edges", "Expected edges for every evidence variable.")
        for name, edges in self.bin_edges.items():
            if len(edges) != k - 1 or np.any(np.diff(edges) <= 0):
                raise ShapeException(name, f"Expected {k - 1} strictly increasing edges.")
        if len(self.cpt_intention) != k ** len(CE_VARIABLES):
            raise ShapeException("cpt_intention", f"Expected {k ** 3} rows.")
        if set(self.cpt_de) != set(DE_VARIABLES):
            raise ShapeException("cpt_de", "Expected tables for every diagnostic variable.")
        for name, rows in self.cpt_de.items():
            if len(rows) != 2 or any(len(row) != k for row in rows):
                raise ShapeException(name, f"Expected a 2 x {k} table.")

    @classmethod
    def from_dict(cls, d: dict) -> "BnModel":
        return structure(_converter, d, cls, "bn model")

    def to_dict(self) -> dict:
        return _converter.unstructure(self)

    @classmethod
    def from_json(cls, text: str) -> "BnModel":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def bins(self, evidence: IntentionEvidence) -> Tuple[int, ...]:
        """Bin index of every evidence variable, in `EVIDENCE_VARIABLES` order."""
        return tuple(
            discretize(value, self.bin_edges[name])
            for name, value in zip(EVIDENCE_VARIABLES, evidence.values())
        )


def discretize(value: float, edges: Sequence[float]) -> int:
    """Bin index of `value`; values outside the edges fall into the first or last bin."""
    if not math.isfinite(value):
        raise InvalidEvidenceException("value")
    return int(np.searchsorted(np.asarray(edges, dtype=float), value, side="right"))


def _quantile_edges(values: np.ndarray, k: int) -> Tuple[float, ...]:
    edges = np.quantile(values, np.arange(1, k) / k)
    # tied quantiles are nudged apart so the edges stay strictly increasing
    for i in range(1, len(edges)):
        if edges[i] <= edges[i - 1]:
            edges[i] = np.nextafter(edges[i - 1], np.inf)
    return tuple(float(e) for e in edges)


def fit_bn(
    samples: Sequence[Tuple[IntentionEvidence, Intention]],
    k: int = DEFAULT_BINS,
    alpha: float = DEFAULT_ALPHA,
) -> BnModel:
    if k < 2:
        raise ParameterException("k_bins", "Need at least two bins.")
    if not (math.isfinite(alpha) and alpha > 0):
        raise ParameterException("alpha", "Smoothing must be positive.")
    if not samples:
        raise ParameterException("samples", "No labeled evidence.")

    values = np.array([evidence.values() for evidence, _ in samples])
    labels = np.array([intention.index for _, intention in samples])
    if len(np.unique(labels)) < 2:
        raise DegenerateDataException("labels", "Both intentions must be present.")

    edges = {}
    for j, name in enumerate(EVIDENCE_VARIABLES):
        if len(np.unique(values[:, j])) < k:
            raise DegenerateDataException(name, f"Fewer than {k} distinct values.")
        edges[name] = _quantile_edges(values[:, j], k)

    bins = np.column_stack(
        [
            np.searchsorted(edges[name], values[:, j], side="right")
            for j, name in enumerate(EVIDENCE_VARIABLES)
        ]
    )
    ce_rows = np.ravel_multi_index(tuple(bins[:, :3].T), (k,) * len(CE_VARIABLES))
    counts = np.zeros((k ** len(CE_VARIABLES), 2))
    np.add.at(counts, (ce_rows, labels), 1)
    cpt_intention = (counts + alpha) / (counts.sum(axis=1, keepdims=True) + 2 * alpha)

    cpt_de = {}
    for j, name in enumerate(DE_VARIABLES, start=len(CE_VARIABLES)):
        de_counts = np.zeros((2, k))
        np.add.at(de_counts, (labels, bins[:, j]), 1)
        table = (de_counts + alpha) / (de_counts.sum(axis=1, keepdims=True) + k * alpha)
        cpt_de[name] = tuple(tuple(float(p) for p in row) for row in table)

    logger.info("Fitted intention network on %d samples", len(samples))
    return BnModel(
        k_bins=k,
        alpha=float(alpha),
        bin_edges=edges,
        cpt_intention=tuple((float(p), float(s)) for p, s in cpt_intention),
        cpt_de=cpt_de,
    )


def infer_intention(model: BnModel, evidence: IntentionEvidence) -> IntentionPosterior:
    k = model.k_bins
    bins = dict(zip(EVIDENCE_VARIABLES, model.bins(evidence)))
    row = (bins["elapsed_yellow"] * k + bins["tti"]) * k + bins["rel_speed"]
    weight_pass, weight_stop = model.cpt_intention[row]
    for name in DE_VARIABLES:
        weight_pass *= model.cpt_de[name][Intention.PASS.index][bins[name]]
        weight_stop *= model.cpt_de[name][Intention.STOP.index][bins[name]]
    total = weight_pass + weight_stop
    return IntentionPosterior(p_pass=weight_pass / total, p_stop=weight_stop / total)


def build_evidence(
    state: TrajectoryPoint, env: EnvironmentState, now: Optional[float] = None
) -> IntentionEvidence:
    now = state.t if now is None else now
    distance = max(0.0, env.stop_bar_x - state.x)
    front = env.front_at([now])
    return IntentionEvidence(
        elapsed_yellow=max(0.0, now - env.yellow_onset),
        tti=min(TTI_CAP, distance / max(state.v, TTI_SPEED_FLOOR)),
        rel_speed=0.0 if front is None else state.v - float(front[1][0]),
        lon_speed=state.v,
        lon_accel=state.a,
    )


def label_trajectory(
    trajectory: Trajectory, env: EnvironmentState, d_label: float = DEFAULT_D_LABEL
) -> Intention:
    """Stop when still more than `d_label` metres short of the stop bar as yellow ends."""
    end = env.yellow_end
    if trajectory.t[0] > end + TIME_TOLERANCE or trajectory.t[-1] < end - TIME_TOLERANCE:
        raise CoverageException(f"trajectory [{trajectory.t[0]}, {trajectory.t[-1]}]")
    x_end = float(np.interp(end, trajectory.t, trajectory.x))
    return Intention.STOP if env.stop_bar_x - x_end > d_label else Intention.PASS


def max_travel_distance(v: float, a_max: float, v_lim: float, remaining: float) -> float:
    """Distance covered in `remaining` seconds accelerating at `a_max` up to `v_lim`."""
    if a_max <= 0 or v >= v_lim:
        return v * remaining
    accelerating = min(remaining, (v_lim - v) / a_max)
    return v * accelerating + 0.5 * a_max * accelerating**2 + v_lim * (remaining - accelerating)


def naive_intention(
    state: TrajectoryPoint, env: EnvironmentState, now: Optional[float] = None
) -> Intention:
    now = state.t if now is None else now
    if not env.in_yellow(now):
        raise PhaseException(now)
    remaining = max(0.0, env.yellow_end - now)
    reach = max_travel_distance(state.v, env.a_max_naive, env.v_lim, remaining)
    return Intention.PASS if reach >= env.stop_bar_x - state.x else Intention.STOP


def intention_samples(
    trajectory: Trajectory,
    env: EnvironmentState,
    intention: Optional[Intention] = None,
    d_label: float = DEFAULT_D_LABEL,
) -> List[Tuple[IntentionEvidence, Intention]]:
    """Labeled evidence for every sample taken during the yellow phase."""
    label = intention or label_trajectory(trajectory, env, d_label)
    return [
        (build_evidence(point, env), label) for point in trajectory if env.in_yellow(point.t)
    ]


def intention_dataset(records, d_label: float = DEFAULT_D_LABEL):
    """Labeled yellow-phase evidence from records carrying `trajectory`, `env` and `intention`."""
    samples: List[Tuple[IntentionEvidence, Intention]] = []
    for record in records:
        samples.extend(
            intention_samples(record.trajectory, record.env, record.intention, d_label)
        )
    logger.info("Built %d labeled evidence samples", len(samples))
    return samples
