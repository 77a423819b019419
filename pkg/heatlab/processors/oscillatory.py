"""
Radial Fourier kernels and quadrature over oscillatory integrands.

For a radial function on R^d the spherical average of cos<xi, x> is
Lambda_d(|xi||x|), with Lambda_1 = cos, Lambda_2 = J_0, Lambda_3 = sin(z)/z.
Integrals against Lambda_d are split at its zeros ("partial waves"); each wave
is integrated with Gauss-Legendre and slowly converging wave sums are
accelerated with the iterated Shanks transform.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
from scipy import integrate, special

from ..errors import InvalidArgumentError

logger = logging.getLogger(__name__)

SUPPORTED_DIMENSIONS = (1, 2, 3)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_J0_TABLE = special.jn_zeros(0, 16)  # all J0 zeros below 50
FAR_TAIL = 30.0  # |log s| beyond which non-finite integrand values count as 0


@dataclass(frozen=True)
class WaveSum:
    value: float
    error: float
    partial_sums: tuple[float, ...]
    waves: int
    accelerated: bool


def sphere_area(d: int) -> float:
    """omega_d = 2 pi^(d/2) / Gamma(d/2); equals 2 for d = 1."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def check_dimension(d: int) -> None:
    if d not in SUPPORTED_DIMENSIONS:
        raise InvalidArgumentError(f"dimension {d} not supported (use 1, 2 or 3)", field="dimension")


def radial_kernel(d: int, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if d == 1:
        return np.cos(z)
    if d == 2:
        return special.j0(z)
    if d == 3:
        return np.sinc(z / np.pi)
    check_dimension(d)


def one_minus_kernel(d: int, z) -> np.ndarray:
    """1 - Lambda_d(z) without cancellation near z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.asarray(1.0 - radial_kernel(d, z), dtype=float)
    small = np.abs(z) < 0.1
    if np.any(small):
        w = -(z[small] ** 2) / 4.0
        series = np.zeros_like(w)
        term = np.ones_like(w)
        for k in range(1, 6):
            term = term * w / (k * (d / 2 + k - 1))
            series -= term
        out[small] = series
    return out


def kernel_zeros(d: int, count: int) -> np.ndarray:
    """First `count` positive zeros of Lambda_d (McMahon expansion past 50 for J0)."""
    k = np.arange(1, count + 1, dtype=float)
    if d == 1:
        return (k - 0.5) * np.pi
    if d == 3:
        return k * np.pi
    check_dimension(d)
    beta = (k - 0.25) * np.pi
    zeros = beta + 1.0 / (8 * beta) - 31.0 / (384 * beta**3) + 3779.0 / (15360 * beta**5)
    n = min(count, _J0_TABLE.size)
    zeros[:n] = _J0_TABLE[:n]
    return zeros


def zeros_above(d: int, z_min: float, count: int) -> np.ndarray:
    """`count` consecutive zeros of Lambda_d strictly above z_min."""
    start = max(int(z_min / np.pi) - 2, 0)
    zeros = kernel_zeros(d, start + count + 4)
    zeros = zeros[zeros > z_min]
    while zeros.size < count:
        start += count
        zeros = kernel_zeros(d, start + count + 4)
        zeros = zeros[zeros > z_min]
    return zeros[:count]


def count_zeros_below(z_max: float) -> int:
    return int(z_max / np.pi) + 2


def gauss_waves(fn: Callable[[np.ndarray], np.ndarray], edges: np.ndarray) -> np.ndarray:
    """Integral of fn over each [edges[i], edges[i+1]] with 24-point Gauss-Legendre."""
    edges = np.asarray(edges, dtype=float)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    values = fn(nodes.ravel()).reshape(nodes.shape)
    return half * (values @ _GL_W)


def shanks_limit(partial_sums) -> tuple[float, float]:
    """Limit of a sequence by the iterated Shanks transform, with an error estimate."""
    sums = [float(s) for s in partial_sums]
    if len(sums) < 4 or max(sums) == min(sums):
        return sums[-1], (abs(sums[-1] - sums[-2]) if len(sums) > 1 else math.inf)
    table = mpmath.shanks([mpmath.mpf(s) for s in sums])
    if len(table) < 3:
        return sums[-1], abs(sums[-1] - sums[-2])
    # rows of even length end in an estimate; shanks() always stops on one
    best = table[-1][-1]
    previous = table[-3][-1]
    return float(best), float(abs(best - previous))


def oscillatory_integral(
        amplitude: Callable[[np.ndarray], np.ndarray],
        d: int,
        scale: float,
        a: float,
        b: float = math.inf,
        *,
        max_waves: int,
        tail_waves: int,
) -> WaveSum:
    """
    Integral over [a, b) of amplitude(s) * Lambda_d(scale * s).

    Waves are summed exactly when [a, b) holds at most `max_waves` of them.
    Otherwise `amplitude` must decay, and the wave sums from a onward (and from
    b onward, for finite b) are extrapolated with Shanks.
    """
    if b <= a:
        return WaveSum(0.0, 0.0, (0.0,), 0, False)

    def integrand(s):
        return amplitude(s) * radial_kernel(d, scale * s)

    if math.isfinite(b) and count_zeros_below(b * scale) <= max_waves:
        zs = kernel_zeros(d, count_zeros_below(b * scale)) / scale
        edges = np.concatenate(([a], zs[(zs > a) & (zs < b)], [b]))
        waves = gauss_waves(integrand, edges)
        sums = np.cumsum(waves)
        return WaveSum(float(sums[-1]), 0.0, tuple(sums[-tail_waves:]), waves.size, False)

    head = _accelerated_tail(integrand, d, scale, a, tail_waves)
    if not math.isfinite(b):
        return head
    tail = _accelerated_tail(integrand, d, scale, b, tail_waves)
    return WaveSum(
        head.value - tail.value,
        head.error + tail.error,
        head.partial_sums,
        head.waves + tail.waves,
        True,
    )


def _accelerated_tail(integrand, d: int, scale: float, a: float, waves: int) -> WaveSum:
    zs = zeros_above(d, a * scale, waves) / scale
    edges = np.concatenate(([a], zs))
    sums = np.cumsum(gauss_waves(integrand, edges))
    value, error = shanks_limit(sums)
    return WaveSum(value, error, tuple(sums), waves, True)


def log_quad(fn: Callable[[float], float], a: float, b: float, *, rtol: float, limit: int = 200) -> tuple[float, float]:
    """
    Integral of fn over (a, b) computed in the variable y = log s.

    Endpoints 0 and inf are allowed; power-law behaviour at either end becomes
    exponential decay in y.
    """
    if b <= a:
        return 0.0, 0.0
    lo = math.log(a) if a > 0 else -math.inf
    hi = math.log(b) if math.isfinite(b) else math.inf

    def g(y: float) -> float:
        if not -700.0 < y < 700.0:
            return 0.0
        s = math.exp(y)
        try:
            with np.errstate(over="ignore", invalid="ignore", under="ignore"):
                value = float(fn(s)) * s
        except OverflowError:
            value = math.inf
        # far in the tails a power-law density overflows while its weight underflows
        if not math.isfinite(value) and abs(y) > FAR_TAIL:
            return 0.0
        return value

    if math.isfinite(lo) and math.isfinite(hi):
        return integrate.quad(g, lo, hi, epsabs=0.0, epsrel=rtol, limit=limit)
    # split semi-infinite ranges near the bulk so QAGI sees a single scale
    pivot = lo + 1.0 if math.isfinite(lo) else (hi - 1.0 if math.isfinite(hi) else 0.0)
    left = integrate.quad(g, lo, pivot, epsabs=0.0, epsrel=rtol, limit=limit)
    right = integrate.quad(g, pivot, hi, epsabs=0.0, epsrel=rtol, limit=limit)
    return left[0] + right[0], left[1] + right[1]
