from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Union

import numpy as np

INF = float("inf")


@dataclass(frozen=True)
class C11Scales:
    r_in: float
    r_out: float
    exterior: tuple[float, float] | None = None

    @property
    def scale(self) -> float:
        return min(self.r_in, self.r_out)


@dataclass(frozen=True)
class Ball:
    dimension: int
    center: tuple[float, ...]
    radius: float

    kind: ClassVar[str] = "ball"
    bounded: ClassVar[bool] = True

    def __post_init__(self):
        _check_point(self.center, self.dimension, "center")
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class ExteriorBall:
    dimension: int
    center: tuple[float, ...]
    radius: float

    kind: ClassVar[str] = "exterior-ball"
    bounded: ClassVar[bool] = False

    def __post_init__(self):
        _check_point(self.center, self.dimension, "center")
        if self.radius <= 0:
            raise ValueError("exterior ball radius must be positive")


@dataclass(frozen=True)
class Halfspace:
    """{x : x_d > level}"""

    dimension: int
    level: float = 0.0

    kind: ClassVar[str] = "halfspace"
    bounded: ClassVar[bool] = False


@dataclass(frozen=True)
class HalfspaceLike:
    """
    {x : x_d > g(|x'|)} with g = b + (a - b) * bump(|x'| / width).

    The bump is 1 - 2s^2 on [0, 1/2], 2(1 - s)^2 on [1/2, 1] and 0 beyond,
    so H_a is inside D and D is inside H_b.
    """

    dimension: int
    a: float
    b: float
    width: float = 1.0

    kind: ClassVar[str] = "halfspace-like"
    bounded: ClassVar[bool] = False

    def __post_init__(self):
        if not self.a > self.b:
            raise ValueError("halfspace-like domain needs a > b")
        if self.width <= 0:
            raise ValueError("bump width must be positive")
        rho = np.linspace(0.0, 2.0 * self.width, 257)
        g = self.profile(rho)
        if np.any(g > self.a + 1e-12) or np.any(g < self.b - 1e-12):
            raise ValueError("bump profile leaves the slab [b, a]")

    def profile(self, rho) -> np.ndarray:
        s = np.abs(np.asarray(rho, dtype=float)) / self.width
        bump = np.where(s <= 0.5, 1.0 - 2.0 * s**2, np.where(s < 1.0, 2.0 * (1.0 - s) ** 2, 0.0))
        return self.b + (self.a - self.b) * bump

    def profile_slope(self, rho) -> np.ndarray:
        s = np.abs(np.asarray(rho, dtype=float)) / self.width
        dbump = np.where(s <= 0.5, -4.0 * s, np.where(s < 1.0, -4.0 * (1.0 - s), 0.0))
        return (self.a - self.b) * dbump / self.width

    def profile_curvature(self, rho) -> np.ndarray:
        s = np.abs(np.asarray(rho, dtype=float)) / self.width
        d2 = np.where(s <= 0.5, -4.0, np.where(s < 1.0, 4.0, 0.0))
        return (self.a - self.b) * d2 / self.width**2


@dataclass(frozen=True)
class UnionTwoBalls:
    dimension: int
    center1: tuple[float, ...]
    center2: tuple[float, ...]
    radius: float

    kind: ClassVar[str] = "union-two-balls"
    bounded: ClassVar[bool] = True

    def __post_init__(self):
        _check_point(self.center1, self.dimension, "center1")
        _check_point(self.center2, self.dimension, "center2")
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def separation(self) -> float:
        return float(np.linalg.norm(np.subtract(self.center2, self.center1)))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    dimension: ClassVar[int] = 1
    kind: ClassVar[str] = "interval"
    bounded: ClassVar[bool] = True

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("interval needs lo < hi")


@dataclass(frozen=True)
class WholeSpace:
    dimension: int

    kind: ClassVar[str] = "whole-space"
    bounded: ClassVar[bool] = False


Domain = Union[Ball, ExteriorBall, Halfspace, HalfspaceLike, UnionTwoBalls, Interval, WholeSpace]


def _check_point(point, dimension: int, name: str) -> None:
    if len(point) != dimension:
        raise ValueError(f"{name} has {len(point)} coordinates, expected {dimension}")
