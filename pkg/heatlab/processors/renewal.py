"""
Renewal function V of the ladder-height process.

Two backends: `exact-laplace` inverts 1/(xi kappa(xi)) numerically, `h-proxy`
sets V = normalization / sqrt(h). Tables are immutable once built.
"""
from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Literal, Optional

import mpmath
import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from ..errors import (
    ConditionHUndecidableError,
    InvalidArgumentError,
    RenewalInversionError,
)
from ..models import GeometricGrid, HEstimate, PresetKind, ProcessModel, RenewalTable
from . import process_models as pm

logger = logging.getLogger(__name__)

Backend = Literal["exact-laplace", "h-proxy"]
BACKENDS = ("exact-laplace", "h-proxy")
DEFAULT_GRID = GeometricGrid(1e-4, 1e4, 16)

STEHFEST_DEGREE = 12
DEHOOG_DEGREE = 18
WORK_DPS = 32
SUBADDITIVE_SLACK = 1e-6


# ----------------------------
# Laplace exponent of the ladder-height process
# ----------------------------
def _log_psi(model: ProcessModel, u: float) -> float:
    return math.log(max(pm.psi_fast(model, u), 1e-300))


def kappa(model: ProcessModel, xi: float) -> float:
    """
    kappa(xi) = exp{(1/pi) int_0^inf log psi(xi z) / (1 + z^2) dz}, with z = tan(phi)
    and the range split where xi z = 1.
    """
    if not (xi > 0 and math.isfinite(xi)):
        raise InvalidArgumentError("kappa needs a finite xi > 0", field="xi")
    split = math.atan(1.0 / xi)
    total = 0.0
    for a, b in ((0.0, split), (split, math.pi / 2)):
        value, _ = integrate.quad(
            lambda phi: _log_psi(model, xi * math.tan(phi)), a, b, epsabs=0.0, epsrel=1e-10, limit=200
        )
        total += value
    return math.exp(total / math.pi)


def kappa_complex(model: ProcessModel, p: complex) -> complex:
    """kappa continued to Re p > 0: log kappa(p) = (1/pi) int_0^inf p log psi(u) / (p^2 + u^2) du."""
    p = complex(p)
    if p.real <= 0:
        raise InvalidArgumentError("kappa_complex needs Re p > 0", field="p")
    pivot = math.log(abs(p))

    def part(y: float, take) -> float:
        if not -700.0 < y < 700.0:
            return 0.0
        u = math.exp(y)
        return take(p * u * _log_psi(model, u) / (p * p + u * u))

    total = 0j
    for take, unit in ((lambda z: z.real, 1.0), (lambda z: z.imag, 1j)):
        left, _ = integrate.quad(part, -np.inf, pivot, args=(take,), epsabs=0.0, epsrel=1e-10, limit=200)
        right, _ = integrate.quad(part, pivot, np.inf, args=(take,), epsabs=0.0, epsrel=1e-10, limit=200)
        total += unit * (left + right)
    return complex(np.exp(total / math.pi))


# ----------------------------
# Table construction
# ----------------------------
def build_renewal_table(
        model: ProcessModel,
        backend: Backend = "h-proxy",
        grid: Optional[GeometricGrid] = None,
        *,
        normalization: float = 1.0,
) -> RenewalTable:
    if backend not in BACKENDS:
        raise InvalidArgumentError(f"unknown renewal backend {backend!r}", field="backend")
    if not normalization > 0:
        raise InvalidArgumentError("normalization must be positive", field="normalization")
    grid = grid or DEFAULT_GRID
    radii = grid.points()
    logger.info("building %s renewal table for %s on %s", backend, model.fingerprint, grid.describe())

    if backend == "h-proxy":
        values = normalization / np.sqrt([pm.pruitt_h(model, float(r)) for r in radii])
        table = RenewalTable(
            radii=radii,
            values=values,
            derivative=_loglog_derivative(radii, values),
            backend=backend,
            fingerprint=model.fingerprint,
            normalization=normalization,
            grid=grid,
        )
    else:
        values = normalization * _invert_laplace(model, radii)
        table = RenewalTable(
            radii=radii,
            values=values,
            derivative=np.gradient(values, radii),
            backend=backend,
            fingerprint=model.fingerprint,
            normalization=normalization,
            grid=grid,
        )
    check_table(table)
    return table


def _invert_laplace(model: ProcessModel, radii: np.ndarray) -> np.ndarray:
    """
    Stehfest on the real axis, then de Hoog on the Bromwich line Re p = gamma > 0.

    Talbot's contour is not used: it enters Re p < 0, where kappa_complex has no
    integral representation and 1/(p kappa(p)) need not continue analytically.
    """

    def transform(p):
        if isinstance(p, mpmath.mpc) and p.imag != 0:
            z = complex(p)
            return mpmath.mpc(1.0 / (z * kappa_complex(model, z)))
        x = float(mpmath.re(p))
        return mpmath.mpf(1.0 / (x * kappa(model, x)))

    values = _invert(transform, radii, "stehfest", STEHFEST_DEGREE)
    bad = _nonmonotone(radii, values)
    if bad:
        logger.warning("Stehfest inversion not monotone at %d radii, retrying with de Hoog", len(bad))
        values = _invert(transform, radii, "dehoog", DEHOOG_DEGREE)
        bad = _nonmonotone(radii, values)
        if bad:
            raise RenewalInversionError(
                f"Laplace inversion unstable at {len(bad)} radii; use the h-proxy backend",
                radii=bad,
                field="backend",
            )
    return values


def _invert(transform, radii: np.ndarray, method: str, degree: int) -> np.ndarray:
    with mpmath.workdps(WORK_DPS):
        return np.array([float(mpmath.invertlaplace(transform, float(r), method=method, degree=degree)) for r in radii])


def _nonmonotone(radii: np.ndarray, values: np.ndarray) -> list[float]:
    bad = list(radii[~(np.isfinite(values) & (values > 0))])
    step = np.diff(values)
    bad += list(radii[1:][~(step > 0)])
    return sorted(set(float(r) for r in bad))


def _loglog_derivative(radii: np.ndarray, values: np.ndarray) -> np.ndarray:
    slope = PchipInterpolator(np.log(radii), np.log(values)).derivative()(np.log(radii))
    return values / radii * slope


def check_table(table: RenewalTable) -> None:
    """V > 0, strictly increasing and subadditive on sampled grid pairs."""
    bad = _nonmonotone(table.radii, table.values)
    if bad:
        raise RenewalInversionError(f"renewal table not positive and increasing at {len(bad)} radii", radii=bad)
    sample = table.radii[::4]
    x, y = np.meshgrid(sample, sample, indexing="ij")
    keep = (x <= y) & (x + y <= table.radii[-1])
    x, y = x[keep], y[keep]
    lhs = table.V(x + y)
    rhs = (table.V(x) + table.V(y)) * (1.0 + SUBADDITIVE_SLACK)
    broken = lhs > rhs
    if np.any(broken):
        raise RenewalInversionError(
            f"renewal table violates subadditivity at {int(broken.sum())} pairs",
            radii=np.unique(x[broken] + y[broken]),
        )


def renewal_eval(table: RenewalTable, query: Literal["V", "Vprime", "Vinverse"], value):
    if query == "V":
        return table.V(value)
    if query == "Vprime":
        return table.Vprime(value)
    if query == "Vinverse":
        return table.Vinverse(value)
    raise InvalidArgumentError(f"unknown renewal query {query!r}", field="query")


# ----------------------------
# Condition H and comparison constants
# ----------------------------
def estimate_H(table: RenewalTable, r: float, resolution: int = 200) -> HEstimate:
    """
    Grid supremum of (V(z) - V(y)) / (V'(x) (z - y)) over x <= y <= z <= 5x, x <= r,
    with z = y read as V'(y) / V'(x).
    """
    if not r > 0:
        raise InvalidArgumentError("r must be positive", field="r")
    xs = np.geomspace(max(float(table.radii[0]), r * 1e-4), r, resolution)
    factors = np.geomspace(1.0, 5.0, resolution)
    best, argmax = -np.inf, (r, r, r)
    iu, ju = np.triu_indices(resolution, k=1)
    for x in xs:
        slope_x = table.Vprime(x)
        if not slope_x > 0:
            raise ConditionHUndecidableError(f"V'({x:g}) = 0; condition H cannot be evaluated", field="r")
        pts = x * factors
        v = table.V(pts)
        vp = table.Vprime(pts)
        secants = (v[ju] - v[iu]) / (pts[ju] - pts[iu])
        k_sec = int(np.argmax(secants))
        k_der = int(np.argmax(vp))
        if secants[k_sec] >= vp[k_der]:
            top, triple = secants[k_sec], (x, pts[iu[k_sec]], pts[ju[k_sec]])
        else:
            top, triple = vp[k_der], (x, pts[k_der], pts[k_der])
        ratio = top / slope_x
        if ratio > best:
            best, argmax = ratio, tuple(float(c) for c in triple)
    return HEstimate(value=max(float(best), 1.0), argmax=argmax, r=float(r), resolution=resolution)


def backend_band(model: ProcessModel, grid: Optional[GeometricGrid] = None) -> tuple[float, float, float]:
    """(K, min, max) of V_exact / V_proxy over the grid, with K = max(max, 1/min)."""
    grid = grid or GeometricGrid(1e-2, 1e2, 8)
    proxy = build_renewal_table(model, "h-proxy", grid)
    exact = build_renewal_table(model, "exact-laplace", grid)
    ratio = exact.values / proxy.values
    lo, hi = float(ratio.min()), float(ratio.max())
    return max(hi, 1.0 / lo), lo, hi


def scaling_transfer_constant(table: RenewalTable, alpha_low: float) -> float:
    """Smallest A with V(eta w) <= A eta^(alpha_low/2) V(w) on all grid pairs, 0 < eta <= 1."""
    r, v = table.radii, table.values
    i, j = np.triu_indices(r.size)
    return float(np.max(v[i] / v[j] / (r[i] / r[j]) ** (alpha_low / 2.0)))


def h_v2_bounds(model: ProcessModel, table: RenewalTable, stride: int = 4) -> tuple[float, float]:
    r = table.radii[::stride]
    product = np.array([pm.pruitt_h(model, float(x)) for x in r]) * table.V(r) ** 2
    return float(product.min()), float(product.max())


# ----------------------------
# Complete Bernstein preset
# ----------------------------
@lru_cache(maxsize=None)
def complete_bernstein_model(d: int, alpha: float) -> ProcessModel:
    """
    psi(u) = V0(u^2), V0 the renewal function of the one-dimensional process
    with psi0(xi) = xi^2 + xi^alpha. Only psi is available.
    """
    if not 0.0 < alpha < 2.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 2), got {alpha!r}", field="alpha")
    base = pm.custom(
        1, f"complete-bernstein-base-{alpha!r}", psi=lambda u: u * u + np.power(u, alpha), validate=False
    )
    table = build_renewal_table(base, "exact-laplace", GeometricGrid(1e-8, 1e8, 8))
    psi_of_u = pm.PsiTable(np.sqrt(table.radii), table.values)
    return ProcessModel(
        kind=PresetKind.COMPLETE_BERNSTEIN,
        dimension=d,
        params=(("alpha", float(alpha)),),
        psi_closed=psi_of_u,
        theta=1.0,
    )


def normalization_for(model: ProcessModel, power: bool) -> float:
    """Gamma(1 + alpha/2) makes the exact stable table equal x^(alpha/2)."""
    if power and model.kind is PresetKind.STABLE:
        return math.gamma(1.0 + float(model.param("alpha")) / 2.0)
    return 1.0
