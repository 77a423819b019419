"""
Isotropic unimodal Levy models.

A model is given by a radial Levy density nu (split into smooth segments) and/or
a radial characteristic exponent psi. This module evaluates psi, nu, Pruitt's
function h, the tail mass L, certifies weak scaling of psi on a grid and builds
the preset catalogue.
"""
from __future__ import annotations

import logging
import math
import threading
import warnings
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline

from ..config import settings
from ..errors import InvalidArgumentError, ModelInvalidError, QuadratureError, ScalingViolatedError
from ..models import GeometricGrid, NuSegment, PresetKind, ProcessModel, ScalingCharacteristics
from .oscillatory import (
    check_dimension,
    kernel_zeros,
    log_quad,
    one_minus_kernel,
    oscillatory_integral,
    sphere_area,
)

logger = logging.getLogger(__name__)

INF = math.inf
PROFILE_VARIANTS = ("piecewise", "log-product", "log-quotient")
SCALING_TOL = 1e-3

_psi_tables: dict[tuple, "PsiTable"] = {}
_psi_lock = threading.Lock()
_scaling_cache: dict[tuple, ScalingCharacteristics] = {}
_scaling_lock = threading.Lock()


# ----------------------------
# Presets
# ----------------------------
def stable_constant(d: int, alpha: float) -> float:
    """c_{d,alpha} with psi(u) = u^alpha for nu(s) = c s^(-d-alpha)."""
    return (
        alpha * 2.0 ** (alpha - 1.0) * math.gamma((d + alpha) / 2.0)
        / (math.pi ** (d / 2.0) * math.gamma(1.0 - alpha / 2.0))
    )


def stable(d: int, alpha: float) -> ProcessModel:
    _check_preset(d, alpha=alpha)
    c = stable_constant(d, alpha)
    return ProcessModel(
        kind=PresetKind.STABLE,
        dimension=d,
        params=(("alpha", float(alpha)),),
        segments=(NuSegment(0.0, INF, lambda s: c * np.power(s, -d - alpha)),),
        psi_closed=lambda u: np.power(u, alpha),
    )


def truncated_stable(d: int, alpha: float, beta: float = 0.0) -> ProcessModel:
    """nu(s) = c_{d,alpha} log^beta(1 + 1/s) s^(-d-alpha) on (0, 1); psi by quadrature."""
    _check_preset(d, alpha=alpha)
    c = stable_constant(d, alpha)
    return ProcessModel(
        kind=PresetKind.TRUNCATED_STABLE,
        dimension=d,
        params=(("alpha", float(alpha)), ("beta", float(beta))),
        segments=(NuSegment(0.0, 1.0, lambda s: c * np.log1p(1.0 / s) ** beta * np.power(s, -d - alpha)),),
        theta=1.0,
    )


def sum_of_stables(d: int, alpha1: float, alpha2: float) -> ProcessModel:
    _check_preset(d, alpha=alpha1)
    _check_preset(d, alpha=alpha2)
    c1, c2 = stable_constant(d, alpha1), stable_constant(d, alpha2)
    return ProcessModel(
        kind=PresetKind.SUM_OF_STABLES,
        dimension=d,
        params=(("alpha", float(alpha1)), ("alpha2", float(alpha2))),
        segments=(NuSegment(0.0, INF, lambda s: c1 * np.power(s, -d - alpha1) + c2 * np.power(s, -d - alpha2)),),
        psi_closed=lambda u: np.power(u, alpha1) + np.power(u, alpha2),
    )


def subordinate_bm(d: int, alpha: float) -> ProcessModel:
    """
    Brownian motion (E e^{i xi B_r} = e^{-r |xi|^2}) run by the subordinator with
    Levy density r^(-1-alpha/2) on (0, 1).

    nu has the closed form pi^(-d/2) 4^a Gamma(d/2 + a) s^(-d-2a) Q(d/2 + a, s^2/4)
    with a = alpha/2 and Q the regularized upper incomplete gamma function.
    """
    _check_preset(d, alpha=alpha)
    a = alpha / 2.0
    c = math.pi ** (-d / 2.0) * 4.0**a * math.gamma(d / 2.0 + a)

    def density(s):
        s = np.asarray(s, dtype=float)
        return c * np.power(s, -d - alpha) * special.gammaincc(d / 2.0 + a, s * s / 4.0)

    return ProcessModel(
        kind=PresetKind.SUBORDINATE_BM,
        dimension=d,
        params=(("alpha", float(alpha)),),
        segments=(NuSegment(0.0, INF, density),),
        psi_scalar=lambda u: subordinator_exponent(u * u, a),
        theta=1.0,
    )


def subordinator_exponent(lam: float, a: float) -> float:
    """phi(lam) = int_0^1 (1 - e^(-lam r)) r^(-1-a) dr by quadrature."""
    if lam <= 0:
        return 0.0
    value, _ = log_quad(lambda r: -math.expm1(-lam * r) * r ** (-1.0 - a), 0.0, 1.0, rtol=settings.QUAD_RTOL)
    return value


def subordinator_exponent_closed(lam: float, a: float) -> float:
    if lam <= 0:
        return 0.0
    return (lam**a * math.gamma(1.0 - a) * special.gammainc(1.0 - a, lam) + math.expm1(-lam)) / a


def profile_nu(d: int, alpha1: float, alpha2: Optional[float] = None, variant: str = "piecewise") -> ProcessModel:
    """
    nu(s) = f(1/s) / s^d.

    piecewise:    f(r) = r^alpha1 for r >= 1, r^alpha2 / 2 for r < 1
    log-product:  f(r) = (r log(r + 1/r))^alpha1
    log-quotient: f(r) = (r / log(r + 1/r))^alpha1
    """
    if variant not in PROFILE_VARIANTS:
        raise InvalidArgumentError(f"unknown profile variant {variant!r}", field="variant")
    _check_preset(d, alpha=alpha1)
    params: tuple = (("alpha", float(alpha1)), ("variant", variant))
    if variant == "piecewise":
        if alpha2 is None:
            raise InvalidArgumentError("piecewise profile needs alpha2", field="alpha2")
        _check_preset(d, alpha=alpha2)
        params = (("alpha", float(alpha1)), ("alpha2", float(alpha2)), ("variant", variant))
        # f is read at r = 1/s, so small jumps carry alpha1: nu(0.5) = 4 for d = 1, alpha1 = 1
        segments = (
            NuSegment(0.0, 1.0, lambda s: np.power(s, -d - alpha1)),
            NuSegment(1.0, INF, lambda s: 0.5 * np.power(s, -d - alpha2)),
        )
    elif variant == "log-product":
        segments = (NuSegment(0.0, INF, lambda s: np.power(np.log(s + 1.0 / s) / s, alpha1) * np.power(s, -d)),)
    else:
        segments = (NuSegment(0.0, INF, lambda s: np.power(1.0 / (s * np.log(s + 1.0 / s)), alpha1) * np.power(s, -d)),)
    return ProcessModel(kind=PresetKind.PROFILE_NU, dimension=d, params=params, segments=segments)


def custom(
        d: int,
        name: str,
        nu: Optional[Callable] = None,
        psi: Optional[Callable] = None,
        *,
        support: float = INF,
        theta: float = 0.0,
        validate: bool = True,
) -> ProcessModel:
    """
    User-supplied model. `name` enters the fingerprint, so distinct callables
    must carry distinct names for the psi and scaling caches.
    """
    check_dimension(d)
    if nu is None and psi is None:
        raise InvalidArgumentError("custom model needs nu or psi", field="nu")
    model = ProcessModel(
        kind=PresetKind.CUSTOM,
        dimension=d,
        params=(("name", name), ("support", float(support))),
        segments=(NuSegment(0.0, support, nu),) if nu is not None else (),
        psi_closed=psi,
        theta=float(theta),
    )
    return validate_model(model) if validate else model


def build_model(kind: str, dimension: int, **params) -> ProcessModel:
    """Preset from its configuration keys (`alpha`, `alpha2`, `beta`, `variant`)."""
    kind = PresetKind(kind)
    alpha = params.get("alpha")
    if kind is PresetKind.STABLE:
        return stable(dimension, alpha)
    if kind is PresetKind.TRUNCATED_STABLE:
        return truncated_stable(dimension, alpha, params.get("beta") or 0.0)
    if kind is PresetKind.SUM_OF_STABLES:
        return sum_of_stables(dimension, alpha, params.get("alpha2"))
    if kind is PresetKind.SUBORDINATE_BM:
        return subordinate_bm(dimension, alpha)
    if kind is PresetKind.PROFILE_NU:
        return profile_nu(dimension, alpha, params.get("alpha2"), params.get("variant") or "piecewise")
    if kind is PresetKind.COMPLETE_BERNSTEIN:
        from .renewal import complete_bernstein_model

        return complete_bernstein_model(dimension, alpha)
    raise InvalidArgumentError("custom models cannot be built from configuration", field="kind")


# ----------------------------
# Levy density and integrals of it
# ----------------------------
def nu_radial(model: ProcessModel, s):
    """nu(s) for s > 0; vectorized."""
    _require_nu(model)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0) or np.any(~np.isfinite(s_arr)):
        raise InvalidArgumentError("nu is defined for finite s > 0", field="s")
    out = np.zeros_like(s_arr)
    for seg in model.segments:
        inside = (s_arr >= seg.lo) & (s_arr < seg.hi)
        if np.any(inside):
            out[inside] += seg.density(s_arr[inside])
    return out if out.ndim else float(out)


def mass_between(model: ProcessModel, a: float, b: float = INF) -> float:
    """nu({a <= |z| < b})"""
    return _radial_moment(model, a, b, power=0)


def second_moment(model: ProcessModel, a: float, b: float = INF) -> float:
    """int_{a <= |z| < b} |z|^2 nu(dz)"""
    return _radial_moment(model, a, b, power=2)


def tail_mass(model: ProcessModel, r: float) -> float:
    """L(r) = nu(B_r^c)"""
    _check_positive(r, "r")
    return mass_between(model, r, INF)


def small_jump_variance(model: ProcessModel, epsilon: float) -> float:
    """Total (all coordinates) second moment of jumps shorter than epsilon."""
    _check_positive(epsilon, "epsilon")
    return second_moment(model, 0.0, epsilon)


def pruitt_h(model: ProcessModel, r: float) -> float:
    """h(r) = int (|z|^2 / r^2 ^ 1) nu(dz)"""
    _check_positive(r, "r")
    h = second_moment(model, 0.0, r) / (r * r) + mass_between(model, r, INF)
    if not (math.isfinite(h) and h > 0):
        raise ModelInvalidError(f"Pruitt function not finite and positive at r={r:g}: {h!r}", field="nu")
    return h


def _radial_moment(model: ProcessModel, a: float, b: float, *, power: int) -> float:
    _require_nu(model)
    d = model.dimension
    total = 0.0
    for seg in model.segments:
        lo, hi = max(a, seg.lo), min(b, seg.hi)
        if hi <= lo:
            continue
        density = seg.density
        total += _checked_integral(lambda s: density(s) * s ** (d - 1 + power), lo, hi)
    return sphere_area(d) * total


def _checked_integral(fn: Callable[[float], float], a: float, b: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, error = log_quad(fn, a, b, rtol=settings.QUAD_RTOL)
    if not math.isfinite(value) or error > 1e-3 * abs(value) + 1e-300:
        raise ModelInvalidError(
            f"radial integral over [{a:g}, {b:g}) does not converge (value {value:g}, error {error:g})",
            field="nu",
        )
    return value


# ----------------------------
# Characteristic exponent
# ----------------------------
def psi(model: ProcessModel, u: float) -> float:
    """psi(u) from the closed form when available, otherwise by quadrature of nu."""
    if u < 0 or not math.isfinite(u):
        raise InvalidArgumentError("psi needs a finite u >= 0", field="u")
    if u == 0:
        return 0.0
    if model.psi_closed is not None:
        return float(model.psi_closed(u))
    if model.psi_scalar is not None:
        return float(model.psi_scalar(u))
    return psi_from_nu(model, u)


def psi_from_nu(model: ProcessModel, u: float) -> float:
    """
    omega_d int (1 - Lambda_d(u s)) nu(s) s^(d-1) ds.

    Each segment is integrated directly up to the first zero of Lambda_d(u s).
    Past it the integral is mass minus the oscillatory part, the latter summed
    wave by wave (Shanks-accelerated when there are too many waves).
    """
    _require_nu(model)
    if u == 0:
        return 0.0
    d = model.dimension
    first_zero = float(kernel_zeros(d, 1)[0]) / u
    value = error = 0.0
    partial: tuple[float, ...] = ()
    for seg in model.segments:
        density = seg.density

        def weight(s, density=density):
            return density(s) * np.power(s, d - 1)

        head_end = min(seg.hi, max(seg.lo, first_zero))
        if head_end > seg.lo:
            v, e = log_quad(lambda s: weight(s) * one_minus_kernel(d, u * s), seg.lo, head_end, rtol=settings.QUAD_RTOL)
            value += v
            error += e
        if head_end >= seg.hi:
            continue
        mass, e = log_quad(weight, head_end, seg.hi, rtol=settings.QUAD_RTOL)
        waves = oscillatory_integral(
            weight, d, u, head_end, seg.hi, max_waves=settings.MAX_WAVES, tail_waves=settings.SHANKS_WAVES
        )
        value += mass - waves.value
        error += e + waves.error
        partial = waves.partial_sums
    omega = sphere_area(d)
    value, error = omega * value, omega * error
    if not math.isfinite(value) or error > 1e3 * settings.PSI_RTOL * abs(value):
        raise QuadratureError(
            f"psi({u:g}) did not converge: value {value:g}, error {error:g}",
            partial_sums=partial,
            error_estimate=error,
            field="u",
        )
    return value


class PsiTable:
    """Cubic spline of log psi against log u with power-law ends."""

    def __init__(self, u: np.ndarray, values: np.ndarray):
        self.log_u = np.log(u)
        self.spline = CubicSpline(self.log_u, np.log(values))
        self._slope = self.spline.derivative()

    def __call__(self, u: np.ndarray) -> np.ndarray:
        y = np.log(u)
        y0, y1 = self.log_u[0], self.log_u[-1]
        inner = np.clip(y, y0, y1)
        out = self.spline(inner)
        out = out + np.where(y < y0, self._slope(y0) * (y - y0), 0.0)
        out = out + np.where(y > y1, self._slope(y1) * (y - y1), 0.0)
        return np.exp(out)


def psi_table(model: ProcessModel) -> PsiTable:
    key = (model.fingerprint, settings.PSI_TABLE_LO, settings.PSI_TABLE_HI, settings.PSI_TABLE_PER_DECADE)
    with _psi_lock:
        table = _psi_tables.get(key)
    if table is not None:
        return table
    grid = GeometricGrid(settings.PSI_TABLE_LO, settings.PSI_TABLE_HI, settings.PSI_TABLE_PER_DECADE)
    u = grid.points()
    logger.info("tabulating psi for %s on %s", model.fingerprint, grid.describe())
    values = np.array([psi(model, float(x)) for x in u])
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ModelInvalidError("psi is not positive on the tabulation grid", field="psi")
    table = PsiTable(u, values)
    with _psi_lock:
        return _psi_tables.setdefault(key, table)


def psi_fast(model: ProcessModel, u):
    """Vectorized psi; models without a closed form go through a cached table."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0):
        raise InvalidArgumentError("psi needs u >= 0", field="u")
    out = np.zeros_like(u_arr)
    pos = u_arr > 0
    if np.any(pos):
        if model.psi_closed is not None:
            out[pos] = model.psi_closed(u_arr[pos])
        else:
            out[pos] = psi_table(model)(u_arr[pos])
    return out if out.ndim else float(out)


# ----------------------------
# Validation and scaling
# ----------------------------
def validate_model(model: ProcessModel) -> ProcessModel:
    """
    Grid checks of the model invariants: nu nonincreasing with finite Pruitt
    function and infinite total mass; psi(0) = 0 and psi > 0 elsewhere.
    """
    check_dimension(model.dimension)
    if psi(model, 0.0) != 0.0:
        raise ModelInvalidError("psi(0) must be 0", field="psi")
    u = np.geomspace(1e-3, 1e3, 25)
    values = np.array([psi(model, float(x)) for x in u])
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise ModelInvalidError("psi must be positive for u > 0", field="psi")
    if not model.has_nu:
        return model

    s = np.geomspace(1e-4, 1e4, 161)
    nu = nu_radial(model, s)
    if np.any(~np.isfinite(nu)) or np.any(nu < 0):
        raise ModelInvalidError("nu must be finite and nonnegative", field="nu")
    rising = np.flatnonzero(np.diff(nu) > 1e-12 * np.maximum(nu[:-1], 1e-300))
    if rising.size:
        raise ModelInvalidError(f"nu increases near s={s[rising[0]]:g}", field="nu")
    pruitt_h(model, 1.0)
    near = mass_between(model, 1e-12, 1.0)
    far = mass_between(model, 1e-3, 1.0)
    if not near > 2.0 * far:
        raise ModelInvalidError("nu must have infinite mass near the origin", field="nu")
    return model


def default_scaling_grid(theta: float) -> GeometricGrid:
    if theta > 0:
        return GeometricGrid(theta, theta * 1e8, 8)
    return GeometricGrid(1e-6, 1e6, 8)


def verify_scaling(
        model: ProcessModel,
        theta: Optional[float] = None,
        grid: Optional[GeometricGrid] = None,
) -> ScalingCharacteristics:
    """
    Grid certificate of c lam^a_low psi(u) <= psi(lam u) <= C lam^a_up psi(u)
    over all grid pairs u > theta, lam >= 1.

    Exponents are the extremes of log(psi(lam u)/psi(u)) / log lam over pairs
    with lam >= 10^min(3, decades/2); the constants are then the extremal
    ratios over all pairs.
    """
    theta = model.theta if theta is None else float(theta)
    grid = grid or default_scaling_grid(theta)
    key = (model.fingerprint, theta, grid)
    with _scaling_lock:
        cached = _scaling_cache.get(key)
    if cached is not None:
        return cached

    u = grid.points()
    u = u[u > theta]
    if u.size < 2 or math.log10(u[-1] / u[0]) < 6.0 - 1e-9:
        raise InvalidArgumentError("scaling grid must span at least 6 decades above theta", field="grid")
    log_u = np.log(u)
    log_psi = np.log(psi_fast(model, u))
    i, j = np.triu_indices(u.size, k=1)
    dl = log_u[j] - log_u[i]
    dp = log_psi[j] - log_psi[i]
    span = (log_u[-1] - log_u[0]) / math.log(10.0)
    wide = dl >= math.log(10.0) * min(3.0, span / 2.0) - 1e-12
    exponents = dp[wide] / dl[wide]
    k_low, k_up = int(np.argmin(exponents)), int(np.argmax(exponents))
    wide_i, wide_j = i[wide], j[wide]
    lower_pair = (float(u[wide_i[k_low]]), float(u[wide_j[k_low]]))
    upper_pair = (float(u[wide_i[k_up]]), float(u[wide_j[k_up]]))
    alpha_low, alpha_up = float(exponents[k_low]), float(exponents[k_up])
    if alpha_low < SCALING_TOL:
        raise ScalingViolatedError(
            f"no lower scaling exponent in (0, 2): worst pair {lower_pair}", worst_pair=lower_pair, exponent=alpha_low
        )
    if alpha_up > 2.0 - SCALING_TOL:
        raise ScalingViolatedError(
            f"no upper scaling exponent in (0, 2): worst pair {upper_pair}", worst_pair=upper_pair, exponent=alpha_up
        )
    c_low = min(1.0, float(np.exp(np.min(dp - alpha_low * dl))))
    C_up = max(1.0, float(np.exp(np.max(dp - alpha_up * dl))))
    result = ScalingCharacteristics(
        alpha_low=alpha_low,
        c_low=c_low,
        theta_low=theta,
        alpha_up=alpha_up,
        C_up=C_up,
        theta_up=theta,
        grid=(float(u[0]), float(u[-1]), int(u.size)),
        lower_pair=lower_pair,
        upper_pair=upper_pair,
    )
    logger.info(
        "scaling %s: alpha in [%.4f, %.4f], c=%.4g, C=%.4g on %s",
        model.fingerprint, alpha_low, alpha_up, c_low, C_up, grid.describe(),
    )
    with _scaling_lock:
        return _scaling_cache.setdefault(key, result)


# ----------------------------
# Helpers
# ----------------------------
def _check_preset(d: int, *, alpha: Optional[float]) -> None:
    check_dimension(d)
    if alpha is None or not 0.0 < alpha < 2.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 2), got {alpha!r}", field="alpha")


def _check_positive(value: float, name: str) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise InvalidArgumentError(f"{name} must be a finite positive number, got {value!r}", field=name)


def _require_nu(model: ProcessModel) -> None:
    if not model.has_nu:
        raise ModelInvalidError(f"{model.kind.value} model has no Levy density", field="nu")
