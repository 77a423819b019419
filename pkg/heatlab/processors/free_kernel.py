"""
Free transition density by radial Fourier inversion, and its two-sided envelope.
"""
from __future__ import annotations

import logging
import math
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Optional

import numpy as np
from scipy import integrate, optimize

from ..config import settings
from ..errors import AccuracyWarning, HartmanWintnerError, InvalidArgumentError, RegimeError
from ..models import UNIT_PROFILE, ConstantProfile, GRResult, KernelEnvelope, ProcessModel, RenewalTable
from . import process_models as pm
from .oscillatory import count_zeros_below, kernel_zeros, log_quad, oscillatory_integral, radial_kernel, sphere_area

logger = logging.getLogger(__name__)

DAMPING = 45.0  # e^-45 ~ 3e-20
GR_CEILING = 1e4

_hw_checked: set[str] = set()
_hw_lock = threading.Lock()


# ----------------------------
# Preconditions
# ----------------------------
def hartman_wintner(model: ProcessModel) -> None:
    """psi(u) / log u must grow without bound; checked on [1e2, 1e8]."""
    with _hw_lock:
        if model.fingerprint in _hw_checked:
            return
    u = np.geomspace(1e2, 1e8, 25)
    q = pm.psi_fast(model, u) / np.log(u)
    if np.any(np.diff(q) < -1e-9 * q[:-1]) or not q[-1] > 4.0 * q[0]:
        raise HartmanWintnerError(
            f"psi(u)/log(u) does not grow on [1e2, 1e8] (ratio {q[-1] / q[0]:.3g}); p_t is unbounded",
            field="psi",
        )
    with _hw_lock:
        _hw_checked.add(model.fingerprint)


def frequency_cutoff(model: ProcessModel, t: float) -> float:
    """s with t psi(s) = DAMPING."""
    target = DAMPING / t

    def gap(y: float) -> float:
        return math.log(pm.psi_fast(model, math.exp(y))) - math.log(target)

    lo, hi = -10.0, 10.0
    while gap(lo) > 0:
        lo -= 10.0
    while gap(hi) < 0:
        hi += 10.0
    return math.exp(optimize.brentq(gap, lo, hi, xtol=1e-10))


# ----------------------------
# Density
# ----------------------------
def p_free(model: ProcessModel, t: float, r: float) -> float:
    """
    p_t(r) = (2 pi)^-d omega_d int_0^inf e^(-t psi(s)) s^(d-1) Lambda_d(r s) ds.

    The head up to the first zero of Lambda_d(r s) is integrated adaptively; the
    waves after it exactly up to the damping cutoff, or by Shanks acceleration
    when there are more than MAX_WAVES of them.
    """
    if not (t > 0 and math.isfinite(t)):
        raise InvalidArgumentError("t must be a finite positive number", field="t")
    if r < 0:
        raise InvalidArgumentError("r must be nonnegative", field="r")
    hartman_wintner(model)
    d = model.dimension
    s_cut = frequency_cutoff(model, t)

    def amplitude(s):
        s = np.asarray(s, dtype=float)
        return np.exp(-t * pm.psi_fast(model, s)) * s ** (d - 1)

    scale = (2.0 * math.pi) ** (-d) * sphere_area(d)
    if r == 0:
        value, _ = log_quad(amplitude, 0.0, s_cut, rtol=settings.QUAD_RTOL)
        return scale * value

    first_zero = float(kernel_zeros(d, 1)[0]) / r
    head_end = min(first_zero, s_cut)
    head, _ = log_quad(lambda s: amplitude(s) * radial_kernel(d, r * s), 0.0, head_end, rtol=settings.QUAD_RTOL)
    if first_zero >= s_cut:
        return scale * head

    if count_zeros_below(r * s_cut) <= settings.MAX_WAVES:
        waves = oscillatory_integral(
            amplitude, d, r, first_zero, s_cut, max_waves=settings.MAX_WAVES, tail_waves=settings.SHANKS_WAVES
        )
    else:
        waves = oscillatory_integral(
            amplitude, d, r, first_zero, math.inf, max_waves=settings.MAX_WAVES, tail_waves=settings.SHANKS_WAVES
        )
    value = scale * (head + waves.value)
    achieved = scale * waves.error
    if achieved > settings.KERNEL_RTOL * abs(value):
        warnings.warn(
            AccuracyWarning(f"p_free(t={t:g}, r={r:g}) reached error {achieved:.2e} only; increase t", achieved)
        )
    return value


def p0(model: ProcessModel, t: float) -> float:
    return p_free(model, t, 0.0)


def p_free_grid(model: ProcessModel, points: Iterable[tuple[float, float]]) -> np.ndarray:
    """p_free over (t, r) pairs, fanned out to worker threads; order preserved."""
    points = list(points)
    hartman_wintner(model)
    with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
        return np.array(list(pool.map(lambda tr: p_free(model, tr[0], tr[1]), points)))


# ----------------------------
# Envelopes
# ----------------------------
def kernel_expression(table: RenewalTable, d: int, t: float, r: float) -> tuple[float, str]:
    """min{[V^-1(sqrt t)]^-d, t / (V^2(r) r^d)} and the regime of (t, r)."""
    near_value = table.Vinverse(math.sqrt(t)) ** (-d)
    if r <= 0:
        return near_value, "near"
    v2 = table.V(r) ** 2
    far_value = t / (v2 * r**d)
    return min(near_value, far_value), ("near" if t > v2 else "far")


def scaling_window(model: ProcessModel, table: RenewalTable) -> Optional[tuple[float, float]]:
    """(time limit, radius limit) for models that only scale above theta."""
    if model.theta <= 0:
        return None
    radius = 1.0 / model.theta
    return table.V(radius) ** 2, radius


def p_free_envelope(
        model: ProcessModel,
        table: RenewalTable,
        t: float,
        r: float,
        profile: ConstantProfile = UNIT_PROFILE,
) -> KernelEnvelope:
    if not t > 0 or r < 0:
        raise InvalidArgumentError("envelope needs t > 0 and r >= 0", field="t")
    pm.verify_scaling(model)
    window = scaling_window(model, table)
    if window is not None and (t >= window[0] or r >= window[1]):
        raise RegimeError(
            f"local scaling only: need t < {window[0]:g} and r < {window[1]:g}", window=window, field="t"
        )
    expression, regime = kernel_expression(table, model.dimension, t, r)
    return KernelEnvelope(
        lower=profile.kernel_low * expression,
        upper=profile.kernel_up * expression,
        expression=expression,
        regime=regime,
        profile=profile.name,
    )


def check_GR(
        model: ProcessModel,
        table: RenewalTable,
        R: float,
        *,
        points: int = 20,
        orders: int = 5,
        ceiling: float = GR_CEILING,
) -> GRResult:
    """
    Smallest C with t / (V^2(|x|) |x|^d) <= C p_t(x) on |x| in [R/1000, R],
    t = 10^-k V^2(|x|), k < orders.
    """
    d = model.dimension
    radii = np.geomspace(R * 1e-3, R, points)
    pairs = [(10.0**-k * table.V(x) ** 2, float(x)) for x in radii for k in range(orders)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        density = p_free_grid(model, pairs)
    expr = np.array([t / (table.V(x) ** 2 * x**d) for t, x in pairs])
    grid = f"|x| geom[{R * 1e-3:g},{R:g}]x{points}, t=10^-k V^2(|x|), k<{orders}"
    positive = density > 0
    ratio = np.where(positive, expr / np.where(positive, density, 1.0), np.inf)
    worst = int(np.argmax(ratio))
    constant = float(ratio[worst])
    holds = bool(np.all(positive)) and constant <= ceiling
    logger.info("G_R at R=%g: constant %.3g (%s)", R, constant, "holds" if holds else "fails")
    return GRResult(
        holds=holds,
        constant=constant,
        violation=None if holds else pairs[worst],
        grid=grid,
        ceiling=ceiling,
    )


# ----------------------------
# Measured constants
# ----------------------------
def small_time_lower_bound(model: ProcessModel, t: float, r: float) -> float:
    """4^(-d-1) t nu(r), valid for t below c / psi(1/r)."""
    return 4.0 ** (-model.dimension - 1) * t * pm.nu_radial(model, r)


def p0_bracket(model: ProcessModel, table: RenewalTable, times: Iterable[float]) -> tuple[float, float]:
    """Extremes of p_t(0) [V^-1(sqrt t)]^d over `times`."""
    times = list(times)
    values = p_free_grid(model, [(t, 0.0) for t in times])
    scaled = values * np.array([table.Vinverse(math.sqrt(t)) ** model.dimension for t in times])
    return float(scaled.min()), float(scaled.max())


def free_kernel_upper_constant(
        model: ProcessModel, table: RenewalTable, times: Iterable[float], radii: Iterable[float]
) -> float:
    """sup p_t(r) r^d V^2(r) / t over the grid."""
    pairs = [(float(t), float(r)) for t in times for r in radii]
    values = p_free_grid(model, pairs)
    d = model.dimension
    weights = np.array([r**d * table.V(r) ** 2 / t for t, r in pairs])
    return float(np.max(values * weights))


# ----------------------------
# Conservation
# ----------------------------
def kernel_width(model: ProcessModel, t: float) -> float:
    """1 / psi^-1(1/t), the spatial scale of p_t."""
    return 1.0 / frequency_cutoff(model, DAMPING * t)


def free_mass(model: ProcessModel, t: float, *, decades: int = 5, per_decade: int = 64) -> float:
    """
    int p_t(x) dx by the radial trapezoid rule on [0, w 10^decades], w the kernel
    width, plus t nu(|z| > reach) for the tail.
    """
    if not (t > 0 and math.isfinite(t)):
        raise InvalidArgumentError("t must be a finite positive number", field="t")
    d = model.dimension
    width = kernel_width(model, t)
    radii = np.concatenate((
        np.linspace(0.0, width, per_decade + 1),
        np.geomspace(width, width * 10.0**decades, decades * per_decade + 1)[1:],
    ))
    density = p_free_grid(model, [(t, float(r)) for r in radii])
    mass = sphere_area(d) * integrate.trapezoid(density * radii ** (d - 1), radii)
    if model.has_nu:
        mass += t * pm.tail_mass(model, float(radii[-1]))
    logger.info("free mass at t=%g: %.8f", t, mass)
    return float(mass)


def free_convolution(
        model: ProcessModel,
        t: float,
        points: Iterable[float],
        *,
        reach: float = 100.0,
        step: float = 0.05,
) -> tuple[np.ndarray, np.ndarray]:
    """
    (p_2t(x), int p_t(x - z) p_t(z) dz) for each x in `points`, d = 1. The
    convolution is a trapezoid sum on |z| <= reach w with spacing step w, w the
    kernel width; one p_free evaluation per distinct distance.
    """
    if model.dimension != 1:
        raise InvalidArgumentError("free convolution is tabulated in d = 1", field="dimension")
    if not (t > 0 and math.isfinite(t)):
        raise InvalidArgumentError("t must be a finite positive number", field="t")
    points = np.asarray(list(points), dtype=float)
    width = kernel_width(model, t)
    count = int(math.ceil(reach / step))
    z = width * step * np.arange(-count, count + 1)
    distances = np.abs(np.concatenate([z] + [x - z for x in points]))
    unique, inverse = np.unique(np.round(distances, 12), return_inverse=True)
    values = p_free_grid(model, [(t, float(r)) for r in unique])[inverse]
    at_z = values[: z.size]
    convolved = np.array([
        integrate.trapezoid(at_z * values[(i + 1) * z.size: (i + 2) * z.size], z) for i in range(points.size)
    ])
    direct = p_free_grid(model, [(2.0 * t, abs(float(x))) for x in points])
    return direct, convolved
