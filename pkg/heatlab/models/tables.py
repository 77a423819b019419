from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import optimize
from scipy.interpolate import PchipInterpolator

from ..errors import TableRangeError

LN10 = float(np.log(10.0))


@dataclass(frozen=True)
class GeometricGrid:
    lo: float
    hi: float
    per_decade: int = 16

    def __post_init__(self):
        if not (0.0 < self.lo < self.hi) or self.per_decade < 1:
            raise ValueError(f"invalid geometric grid {self.lo}..{self.hi} @ {self.per_decade}/decade")

    @property
    def decades(self) -> float:
        return float(np.log10(self.hi / self.lo))

    def points(self) -> np.ndarray:
        n = int(round(self.decades * self.per_decade)) + 1
        return np.geomspace(self.lo, self.hi, max(n, 2))

    def describe(self) -> str:
        return f"geom[{self.lo:g},{self.hi:g}]x{self.per_decade}/dec"


@dataclass(frozen=True, eq=False)
class RenewalTable:
    """
    Renewal function V tabulated on a logarithmic radius grid.

    Interpolation is monotone cubic on log-log axes. Queries up to one decade
    outside the grid are extrapolated log-linearly from the end slopes.
    """

    radii: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    backend: str
    fingerprint: str
    normalization: float = 1.0
    grid: GeometricGrid | None = field(default=None)

    @cached_property
    def _log_r(self) -> np.ndarray:
        return np.log(self.radii)

    @cached_property
    def _log_v(self) -> PchipInterpolator:
        return PchipInterpolator(self._log_r, np.log(self.values))

    @cached_property
    def _log_vp(self) -> PchipInterpolator:
        return PchipInterpolator(self._log_r, np.log(np.maximum(self.derivative, np.finfo(float).tiny)))

    @property
    def r_min(self) -> float:
        return float(self.radii[0]) / 10.0

    @property
    def r_max(self) -> float:
        return float(self.radii[-1]) * 10.0

    def _loglog(self, interp: PchipInterpolator, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        y = np.log(r)
        y0, y1 = self._log_r[0], self._log_r[-1]
        if np.any(y < y0 - LN10 - 1e-12) or np.any(y > y1 + LN10 + 1e-12):
            raise TableRangeError(
                f"radius outside renewal table range [{self.r_min:g}, {self.r_max:g}]", field="r"
            )
        out = np.empty_like(y)
        inside = (y >= y0) & (y <= y1)
        out[inside] = interp(y[inside])
        below, above = y < y0, y > y1
        if np.any(below):
            out[below] = interp(y0) + interp.derivative()(y0) * (y[below] - y0)
        if np.any(above):
            out[above] = interp(y1) + interp.derivative()(y1) * (y[above] - y1)
        return np.exp(out)

    def V(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0
        if np.any(pos):
            out[pos] = self._loglog(self._log_v, r[pos])
        return out if out.ndim else float(out)

    def Vprime(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0
        if np.any(pos):
            out[pos] = self._loglog(self._log_vp, r[pos])
        return out if out.ndim else float(out)

    def Vinverse(self, s: float) -> float:
        if s <= 0:
            return 0.0
        lo, hi = np.log(self.r_min), np.log(self.r_max)
        target = np.log(s)

        def gap(y: float) -> float:
            return float(np.log(self._loglog(self._log_v, np.exp(y)))) - target

        if gap(lo) > 0 or gap(hi) < 0:
            raise TableRangeError(f"V^-1({s:g}) outside renewal table range", field="s")
        y = optimize.brentq(gap, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
        return float(np.exp(y))
