from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..models import (
    Ball,
    Domain,
    ExteriorBall,
    GeometricGrid,
    Halfspace,
    HalfspaceLike,
    Interval,
    ProcessModel,
    SimConfig,
    UnionTwoBalls,
    WholeSpace,
)

CheckName = Literal[
    "free-kernel-oracle",
    "free-kernel-agreement",
    "free-kernel-mass",
    "free-chapman-kolmogorov",
    "envelope-sandwich",
    "survival-factorization",
    "kernel-factorization",
    "ub-product",
    "killed-chapman-kolmogorov",
    "domain-monotonicity",
    "eigen-bracket",
    "overshoot",
    "ikeda-watanabe",
    "v-product",
    "bias-control",
]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ----------------------------
# [model]
# ----------------------------
class _ModelSection(_Section):
    dimension: int = Field(1, ge=1, le=3)

    def params(self) -> dict:
        return self.model_dump(exclude={"kind", "dimension"}, exclude_none=True)

    def build(self) -> ProcessModel:
        from ..processors.process_models import build_model

        return build_model(self.kind, self.dimension, **self.params())


class StableSection(_ModelSection):
    kind: Literal["stable"]
    alpha: float = Field(gt=0, lt=2)


class TruncatedStableSection(_ModelSection):
    kind: Literal["truncated-stable"]
    alpha: float = Field(gt=0, lt=2)
    beta: float = 0.0


class SumOfStablesSection(_ModelSection):
    kind: Literal["sum-of-stables"]
    alpha: float = Field(gt=0, lt=2)
    alpha2: float = Field(gt=0, lt=2)


class SubordinateBMSection(_ModelSection):
    kind: Literal["subordinate-bm"]
    alpha: float = Field(gt=0, lt=2)


class ProfileSection(_ModelSection):
    kind: Literal["profile-nu"]
    alpha: float = Field(gt=0, lt=2)
    alpha2: Optional[float] = Field(None, gt=0, lt=2)
    variant: Literal["piecewise", "log-product", "log-quotient"] = "piecewise"


class CompleteBernsteinSection(_ModelSection):
    kind: Literal["complete-bernstein"]
    alpha: float = Field(gt=0, lt=2)


ModelSection = Annotated[
    Union[
        StableSection,
        TruncatedStableSection,
        SumOfStablesSection,
        SubordinateBMSection,
        ProfileSection,
        CompleteBernsteinSection,
    ],
    Field(discriminator="kind"),
]


# ----------------------------
# [domain]
# ----------------------------
class BallSection(_Section):
    kind: Literal["ball"]
    center: list[float] = Field(min_length=1, max_length=3)
    radius: float = Field(gt=0)

    def build(self, dimension: int) -> Domain:
        return Ball(dimension, tuple(self.center), self.radius)


class ExteriorBallSection(_Section):
    kind: Literal["exterior-ball"]
    center: list[float] = Field(min_length=1, max_length=3)
    radius: float = Field(gt=0)

    def build(self, dimension: int) -> Domain:
        return ExteriorBall(dimension, tuple(self.center), self.radius)


class HalfspaceSection(_Section):
    kind: Literal["halfspace"]
    level: float = 0.0

    def build(self, dimension: int) -> Domain:
        return Halfspace(dimension, self.level)


class HalfspaceLikeSection(_Section):
    kind: Literal["halfspace-like"]
    a: float
    b: float
    width: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.a > self.b:
            raise ValueError("halfspace-like domain needs a > b")
        return self

    def build(self, dimension: int) -> Domain:
        return HalfspaceLike(dimension, self.a, self.b, self.width)


class UnionTwoBallsSection(_Section):
    kind: Literal["union-two-balls"]
    center1: list[float] = Field(min_length=1, max_length=3)
    center2: list[float] = Field(min_length=1, max_length=3)
    radius: float = Field(gt=0)

    def build(self, dimension: int) -> Domain:
        return UnionTwoBalls(dimension, tuple(self.center1), tuple(self.center2), self.radius)


class IntervalSection(_Section):
    kind: Literal["interval"]
    lo: float
    hi: float

    @model_validator(mode="after")
    def _ordered(self):
        if not self.hi > self.lo:
            raise ValueError("interval needs lo < hi")
        return self

    def build(self, dimension: int) -> Domain:
        return Interval(self.lo, self.hi)


class WholeSpaceSection(_Section):
    kind: Literal["whole-space"]

    def build(self, dimension: int) -> Domain:
        return WholeSpace(dimension)


DomainSection = Annotated[
    Union[
        BallSection,
        ExteriorBallSection,
        HalfspaceSection,
        HalfspaceLikeSection,
        UnionTwoBallsSection,
        IntervalSection,
        WholeSpaceSection,
    ],
    Field(discriminator="kind"),
]


# ----------------------------
# Numerics
# ----------------------------
class RenewalSection(_Section):
    backend: Literal["h-proxy", "exact-laplace"] = "h-proxy"
    normalization: Union[float, Literal["power"]] = 1.0
    lo: float = Field(1e-4, gt=0)
    hi: float = Field(1e4, gt=0)
    per_decade: int = Field(16, ge=1, le=256)

    @model_validator(mode="after")
    def _range(self):
        if not self.hi > self.lo:
            raise ValueError("renewal grid needs lo < hi")
        return self

    @property
    def grid(self) -> GeometricGrid:
        return GeometricGrid(self.lo, self.hi, self.per_decade)


class SimulationSection(_Section):
    epsilon: float = Field(1e-2, gt=0)
    dt: float = Field(1e-3, gt=0)
    n_paths: int = Field(10_000, ge=1)
    small_jump_mode: Literal["gaussian-match", "drop"] = "gaussian-match"
    exit_refinement: int = Field(8, ge=0, le=40)
    t_max: float = Field(50.0, gt=0)

    def sim_config(self, seed: int) -> SimConfig:
        return SimConfig(
            epsilon=self.epsilon,
            dt=self.dt,
            n_paths=self.n_paths,
            seed=seed,
            small_jump_mode=self.small_jump_mode,
            exit_refinement=self.exit_refinement,
        )


class GridsSection(_Section):
    times: list[float] = Field(default_factory=lambda: [0.1, 0.5, 1.0])
    radii: list[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0, 5.0])
    distances: list[float] = Field(default_factory=lambda: [0.1, 0.25, 0.5])
    points: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    bin_width: float = Field(0.1, gt=0)
    ceiling: float = Field(100.0, ge=1)
    ceilings: dict[CheckName, float] = Field(default_factory=dict)

    @field_validator("times", "distances", "points")
    @classmethod
    def _positive(cls, values: list[float]) -> list[float]:
        if any(v <= 0 for v in values):
            raise ValueError("grid values must be positive")
        return sorted(values)

    @field_validator("radii")
    @classmethod
    def _nonnegative(cls, values: list[float]) -> list[float]:
        if any(v < 0 for v in values):
            raise ValueError("radii must be nonnegative")
        return sorted(values)

    def ceiling_for(self, check: str, default: Optional[float] = None) -> float:
        if check in self.ceilings:
            return self.ceilings[check]
        return self.ceiling if default is None else default


# ----------------------------
# Campaign
# ----------------------------
class CampaignConfig(_Section):
    """One campaign file: one model, one domain, one seed."""

    seed: int = Field(0, ge=0, lt=2**64)
    profile: str = "default"
    checks: list[CheckName] = Field(default_factory=list)
    output_dir: Optional[Path] = None

    model: ModelSection
    domain: DomainSection = Field(default_factory=lambda: WholeSpaceSection(kind="whole-space"))
    renewal: RenewalSection = Field(default_factory=RenewalSection)
    simulation: SimulationSection = Field(default_factory=SimulationSection)
    grids: GridsSection = Field(default_factory=GridsSection)

    @model_validator(mode="after")
    def _dimensions_agree(self):
        d = self.model.dimension
        for name in ("center", "center1", "center2"):
            point = getattr(self.domain, name, None)
            if point is not None and len(point) != d:
                raise ValueError(f"domain.{name} has {len(point)} coordinates but model.dimension is {d}")
        if self.domain.kind == "interval" and d != 1:
            raise ValueError("an interval domain needs model.dimension = 1")
        if len(set(self.checks)) != len(self.checks):
            raise ValueError("checks must not repeat")
        return self

    def build_domain(self) -> Domain:
        return self.domain.build(self.model.dimension)
