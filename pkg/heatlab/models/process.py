from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]


class PresetKind(str, Enum):
    STABLE = "stable"
    TRUNCATED_STABLE = "truncated-stable"
    SUM_OF_STABLES = "sum-of-stables"
    SUBORDINATE_BM = "subordinate-bm"
    PROFILE_NU = "profile-nu"
    COMPLETE_BERNSTEIN = "complete-bernstein"
    CUSTOM = "custom"


@dataclass(frozen=True)
class NuSegment:
    """
    One smooth piece of a radial Levy density, active on [lo, hi).

    `density` must be vectorized and smooth on the whole half-line: integrals
    over [lo, hi) may be computed as differences of tails of its continuation.
    """

    lo: float
    hi: float
    density: ArrayFn = field(compare=False, repr=False)


@dataclass(frozen=True)
class ProcessModel:
    kind: PresetKind
    dimension: int
    params: tuple[tuple[str, float | str], ...] = ()
    segments: tuple[NuSegment, ...] = field(default=(), compare=False, repr=False)
    psi_closed: Optional[ArrayFn] = field(default=None, compare=False, repr=False)
    psi_scalar: Optional[Callable[[float], float]] = field(default=None, compare=False, repr=False)
    theta: float = 0.0

    def param(self, name: str, default=None):
        return dict(self.params).get(name, default)

    @property
    def has_nu(self) -> bool:
        return bool(self.segments)

    @property
    def support(self) -> float:
        return max((s.hi for s in self.segments), default=0.0)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        points = {s.lo for s in self.segments} | {s.hi for s in self.segments}
        return tuple(sorted(p for p in points if 0.0 < p < np.inf))

    @property
    def fingerprint(self) -> str:
        payload = json.dumps(
            {"kind": self.kind.value, "dimension": self.dimension, "params": list(self.params), "theta": self.theta},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def describe(self) -> dict:
        return {"kind": self.kind.value, "dimension": self.dimension, "theta": self.theta, **dict(self.params)}


@dataclass(frozen=True)
class ScalingCharacteristics:
    alpha_low: float
    c_low: float
    theta_low: float
    alpha_up: float
    C_up: float
    theta_up: float
    grid: tuple[float, float, int] = (0.0, 0.0, 0)
    lower_pair: tuple[float, float] = (0.0, 0.0)
    upper_pair: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (0.0 < self.alpha_low <= self.alpha_up < 2.0):
            raise ValueError(f"scaling exponents out of order: {self.alpha_low}, {self.alpha_up}")
        if not (0.0 < self.c_low <= 1.0 <= self.C_up):
            raise ValueError(f"scaling constants out of range: {self.c_low}, {self.C_up}")

    @property
    def global_low(self) -> bool:
        return self.theta_low == 0.0

    @property
    def global_up(self) -> bool:
        return self.theta_up == 0.0

    @property
    def is_global(self) -> bool:
        return self.global_low and self.global_up
