from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

Regime = Literal["near", "far"]
SurvivalRegime = Literal["small-time", "large-time", "all-time", "lower-only"]


@dataclass(frozen=True)
class ConstantProfile:
    """
    Named multiplicative constants applied to structural expressions.

    `kernel_*` bracket the free kernel, `survival_*` the survival factor,
    `factor_*` the Dirichlet kernel factorization. `exit_C1` is the exit-time
    constant (E tau_B(r) >= V(r)^2 / C1); the eigenvalue upper rate uses
    C1 * 2^(d/2).
    """

    name: str
    kernel_low: float = 1.0
    kernel_up: float = 1.0
    survival_low: float = 1.0
    survival_up: float = 1.0
    factor_low: float = 1.0
    factor_up: float = 1.0
    exit_C1: float = 1.0
    provenance: str = ""

    def __post_init__(self):
        for low, up in (
            (self.kernel_low, self.kernel_up),
            (self.survival_low, self.survival_up),
            (self.factor_low, self.factor_up),
        ):
            if not (0.0 < low <= 1.0 <= up):
                raise ValueError(f"profile {self.name!r}: constants must satisfy 0 < low <= 1 <= up")
        if self.exit_C1 < 1.0:
            raise ValueError(f"profile {self.name!r}: exit_C1 must be >= 1")


@dataclass(frozen=True)
class KernelEnvelope:
    lower: float
    upper: float
    expression: float
    regime: Regime
    profile: str

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("kernel envelope lower exceeds upper")


@dataclass(frozen=True)
class Envelope:
    lower: float
    upper: float
    profile: str


@dataclass(frozen=True)
class EigenBracket:
    lambda_low: float
    lambda_high: float
    inradius: float
    diameter: float
    lambda_low_exit: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.lambda_low <= self.lambda_high):
            raise ValueError("eigen bracket must satisfy 0 < lambda_low <= lambda_high")

    @property
    def midpoint(self) -> float:
        return (self.lambda_low * self.lambda_high) ** 0.5

    def contains(self, rate: float) -> bool:
        return self.lambda_low <= rate <= self.lambda_high


@dataclass(frozen=True)
class SurvivalEnvelope:
    factor: float
    structural: float
    lower: float
    upper: float
    regime: SurvivalRegime
    geometry: str
    rate: Optional[float] = None

    def __post_init__(self):
        if not (0.0 <= self.factor <= 1.0):
            raise ValueError("survival factor must lie in [0, 1]")
        if not (self.lower <= self.structural <= self.upper):
            raise ValueError("survival envelope must bracket the structural value")


@dataclass(frozen=True)
class Factorization:
    value: float
    envelope: Envelope
    regime: SurvivalRegime
    geometry: str
    factors: tuple[float, float] = (0.0, 0.0)
    kernel: float = 0.0


@dataclass(frozen=True)
class GRResult:
    holds: bool
    constant: float
    violation: Optional[tuple[float, float]] = None
    grid: str = ""
    ceiling: float = 0.0


@dataclass(frozen=True)
class HEstimate:
    value: float
    argmax: tuple[float, float, float]
    r: float
    resolution: int = 200


@dataclass(frozen=True)
class ExitTimeEnvelope:
    lower: float
    upper: float
    usable_radius: float = 0.0


@dataclass(frozen=True)
class IJ:
    I: float
    J: float
    argmin_I: float = 0.0
    argmin_J: float = 0.0
    resolution: int = 200


UNIT_PROFILE = ConstantProfile(name="unit", provenance="all constants 1")
