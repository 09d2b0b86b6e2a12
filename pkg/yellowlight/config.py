"""
Parses configuration specifications into concrete objects.

Users should write something like:
    spec = config.PredictorSpec.default()
    spec.merge(config.PredictorSpec.from_dict(toml.load(my_config_file)))
    my_config = spec.resolve()
to obtain a concrete PredictorConfiguration object.

Spec objects are direct representations of the configuration file; every value is optional so
that a user file only needs to name what it overrides. Calling .resolve() on the merged spec
produces validated settings objects for each part of the predictor.
"""

from os import PathLike
from pathlib import Path
from typing import Any, Mapping, Optional, Tuple, Union

import attr
import cattr
import toml

from .core import ControlBounds
from .errors import ParameterException
from .intention import DEFAULT_ALPHA, DEFAULT_BINS, DEFAULT_D_LABEL
from .irl import TrainConfig
from .online import OnlineConfig
from .scenario import DatasetPlan, ScenarioConfig
from .trajopt import OptimizerConfig

DEFAULT_CONFIG = Path(__file__).parent / "config" / "default.toml"

_converter = cattr.Converter()


def _merge_fields(target: Any, other: Any) -> None:
    """Overlay every value `other` sets; nested specs merge recursively."""
    for key in attr.fields_dict(type(target)):
        mine, theirs = getattr(target, key), getattr(other, key)
        if attr.has(type(mine)) and attr.has(type(theirs)):
            _merge_fields(mine, theirs)
        elif theirs is not None:
            setattr(target, key, theirs)


def _present(spec: Any) -> dict:
    """Fields of a spec that were set, ready to pass as keyword arguments."""
    return {
        key: value
        for key, value in attr.asdict(spec, recurse=False).items()
        if value is not None and not attr.has(type(value))
    }


@attr.s(auto_attribs=True, kw_only=True)
class BoundsSpec:
    a_min: Optional[float] = None
    a_max: Optional[float] = None
    psi_max: Optional[float] = None

    def resolve(self) -> ControlBounds:
        return ControlBounds(**_present(self))


@attr.s(auto_attribs=True, kw_only=True)
class OptimizerSpec:
    horizon: Optional[int] = None
    tau: Optional[float] = None
    max_iters: Optional[int] = None
    grad_step: Optional[float] = None
    tol: Optional[float] = None
    restarts: Optional[int] = None
    max_halvings: Optional[int] = None
    initial_step: Optional[float] = None
    seed: Optional[int] = None
    bounds: BoundsSpec = attr.Factory(BoundsSpec)

    def resolve(self) -> OptimizerConfig:
        return OptimizerConfig(bounds=self.bounds.resolve(), **_present(self))


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class BnSettings:
    k_bins: int = DEFAULT_BINS
    alpha: float = DEFAULT_ALPHA
    d_label: float = DEFAULT_D_LABEL

    def __attrs_post_init__(self):
        if self.d_label < 0:
            raise ParameterException("d_label", "Must be non-negative.")


@attr.s(auto_attribs=True, kw_only=True)
class BnSpec:
    k_bins: Optional[int] = None
    alpha: Optional[float] = None
    d_label: Optional[float] = None

    def resolve(self) -> BnSettings:
        return BnSettings(**_present(self))


@attr.s(auto_attribs=True, kw_only=True)
class IrlSpec:
    learning_rate: Optional[float] = None
    grad_tol: Optional[float] = None
    max_epochs: Optional[int] = None
    stride: Optional[float] = None

    def resolve(self, optimizer: OptimizerConfig, scheduler: Optional[str]) -> TrainConfig:
        settings = _present(self)
        settings.pop("stride", None)
        return TrainConfig(optimizer=optimizer, scheduler=scheduler, **settings)


@attr.s(auto_attribs=True, kw_only=True)
class OnlineSpec:
    replan_interval: Optional[float] = None
    initial_lambda: Optional[float] = None
    lambda_grid: Optional[Tuple[float, ...]] = None

    def resolve(self, optimizer: OptimizerConfig, scheduler: Optional[str]) -> OnlineConfig:
        return OnlineConfig(optimizer=optimizer, scheduler=scheduler, **_present(self))


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class SimulationSettings:
    plan: DatasetPlan = attr.Factory(DatasetPlan)

    @property
    def scenario(self) -> ScenarioConfig:
        return self.plan.base


@attr.s(auto_attribs=True, kw_only=True)
class SimulationSpec:
    approach_speed_range: Optional[Tuple[float, float]] = None
    initial_distance_range: Optional[Tuple[float, float]] = None
    yellow_duration: Optional[float] = None
    v_lim: Optional[float] = None
    stop_bar_x: Optional[float] = None
    driver: Optional[str] = None
    lead_in: Optional[float] = None
    tail: Optional[float] = None
    max_duration: Optional[float] = None
    stop_margin: Optional[float] = None
    red_duration: Optional[float] = None
    a_max_naive: Optional[float] = None
    dilemma_slope: Optional[float] = None
    dilemma_offset: Optional[float] = None
    train_per_maneuver: Optional[int] = None
    test_size: Optional[int] = None
    intention_size: Optional[int] = None

    def resolve(self, optimizer: OptimizerConfig, replan_interval: float) -> SimulationSettings:
        settings = _present(self)
        sizes = {
            key: settings.pop(key)
            for key in ("train_per_maneuver", "test_size", "intention_size")
            if key in settings
        }
        for key, value in sizes.items():
            if value < 0:
                raise ParameterException(key, "Must be non-negative.")
        base = ScenarioConfig(optimizer=optimizer, replan_interval=replan_interval, **settings)
        return SimulationSettings(plan=DatasetPlan(base=base, **sizes))


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class EvaluationSettings:
    trace: bool = True
    profiles: bool = True


@attr.s(auto_attribs=True, kw_only=True)
class EvaluationSpec:
    trace: Optional[bool] = None
    profiles: Optional[bool] = None

    def resolve(self) -> EvaluationSettings:
        return EvaluationSettings(**_present(self))


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class PredictorConfiguration:
    """A fully concrete configuration.

    Instead of instantiating this directly, consider using PredictorSpec.resolve().
    """

    optimizer: OptimizerConfig
    train: TrainConfig
    demo_stride: Optional[float]
    online: OnlineConfig
    bn: BnSettings
    simulation: SimulationSettings
    evaluation: EvaluationSettings


@attr.s(auto_attribs=True, kw_only=True)
class PredictorSpec:
    """Represents a configuration file.

    The expected use is like:
        PredictorSpec.default().merge(PredictorSpec.from_dict(toml.load(path))).resolve()
    """

    bn: BnSpec = attr.Factory(BnSpec)
    optimizer: OptimizerSpec = attr.Factory(OptimizerSpec)
    irl: IrlSpec = attr.Factory(IrlSpec)
    online: OnlineSpec = attr.Factory(OnlineSpec)
    simulation: SimulationSpec = attr.Factory(SimulationSpec)
    evaluation: EvaluationSpec = attr.Factory(EvaluationSpec)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PredictorSpec":
        unknown = set(d) - set(attr.fields_dict(cls))
        if unknown:
            raise ParameterException("config", f"Unknown sections {sorted(unknown)}.")
        try:
            return _converter.structure(d, cls)
        # error types differ across cattrs releases
        except Exception as e:
            raise ParameterException("config", str(e)) from e

    @classmethod
    def from_file(cls, path: Union[str, PathLike]) -> "PredictorSpec":
        try:
            return cls.from_dict(toml.load(path))
        except toml.TomlDecodeError as e:
            raise ParameterException(path, f"Invalid TOML: {e}") from e

    @classmethod
    def default(cls) -> "PredictorSpec":
        return cls.from_file(DEFAULT_CONFIG)

    def merge(self, other: "PredictorSpec") -> "PredictorSpec":
        """Merges another spec into the current one; values set in `other` win."""
        _merge_fields(self, other)
        return self

    def resolve(
        self, seed: Optional[int] = None, scheduler: Optional[str] = None
    ) -> PredictorConfiguration:
        optimizer = self.optimizer.resolve()
        if seed is not None:
            optimizer = attr.evolve(optimizer, seed=seed)
        online = self.online.resolve(optimizer, scheduler)
        return PredictorConfiguration(
            optimizer=optimizer,
            train=self.irl.resolve(optimizer, scheduler),
            demo_stride=self.irl.stride,
            online=online,
            bn=self.bn.resolve(),
            simulation=self.simulation.resolve(optimizer, online.replan_interval),
            evaluation=self.evaluation.resolve(),
        )


def load_configuration(
    path: Optional[Union[str, PathLike]] = None,
    seed: Optional[int] = None,
    scheduler: Optional[str] = None,
) -> PredictorConfiguration:
    """Packaged defaults, overridden by the file at `path` when given."""
    spec = PredictorSpec.default()
    if path is not None:
        spec.merge(PredictorSpec.from_file(path))
    return spec.resolve(seed=seed, scheduler=scheduler)
