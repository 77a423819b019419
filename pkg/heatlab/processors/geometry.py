"""
Analytic domains: distance to the complement, C^{1,1} scales, tangent balls and
the I/J functionals of a model on a domain-free radius.

Every distance routine works on point arrays of shape (n, d) and is dispatched
on the domain type.
"""
from __future__ import annotations

import logging
import math
from functools import singledispatch

import numpy as np

from ..errors import InvalidArgumentError
from ..models import (
    IJ,
    Ball,
    C11Scales,
    Domain,
    ExteriorBall,
    Halfspace,
    HalfspaceLike,
    Interval,
    ProcessModel,
    RenewalTable,
    UnionTwoBalls,
    WholeSpace,
)
from . import process_models as pm

logger = logging.getLogger(__name__)

INF = math.inf
BUMP_SAMPLES = 257
NEWTON_STEPS = 8


def as_points(domain: Domain, x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, 1) if domain.dimension == 1 and pts.size != 1 else pts.reshape(1, -1)
    if pts.shape[1] != domain.dimension:
        raise InvalidArgumentError(
            f"points have {pts.shape[1]} coordinates, domain has dimension {domain.dimension}", field="x"
        )
    return pts


# ----------------------------
# Distance to the complement
# ----------------------------
def dist_to_complement(domain: Domain, x) -> float:
    """delta_D(x); 0 outside D."""
    return float(delta(domain, as_points(domain, x))[0])


def contains(domain: Domain, x) -> np.ndarray:
    return delta(domain, as_points(domain, x)) > 0


@singledispatch
def delta(domain, pts: np.ndarray) -> np.ndarray:
    raise InvalidArgumentError(f"unsupported domain {type(domain).__name__}", field="domain")


@delta.register
def _(domain: Ball, pts: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, domain.radius - np.linalg.norm(pts - np.asarray(domain.center), axis=1))


@delta.register
def _(domain: ExteriorBall, pts: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, np.linalg.norm(pts - np.asarray(domain.center), axis=1) - domain.radius)


@delta.register
def _(domain: Halfspace, pts: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, pts[:, -1] - domain.level)


@delta.register
def _(domain: Interval, pts: np.ndarray) -> np.ndarray:
    x = pts[:, 0]
    return np.maximum(0.0, np.minimum(x - domain.lo, domain.hi - x))


@delta.register
def _(domain: WholeSpace, pts: np.ndarray) -> np.ndarray:
    return np.full(pts.shape[0], INF)


@delta.register
def _(domain: UnionTwoBalls, pts: np.ndarray) -> np.ndarray:
    c1, c2, R = np.asarray(domain.center1, float), np.asarray(domain.center2, float), domain.radius
    r1 = np.linalg.norm(pts - c1, axis=1)
    r2 = np.linalg.norm(pts - c2, axis=1)
    inside = (r1 < R) | (r2 < R)
    out = np.zeros(pts.shape[0])
    if not np.any(inside):
        return out
    p, r1, r2 = pts[inside], r1[inside], r2[inside]
    if domain.dimension == 1:
        ends = np.array([c1[0] - R, c1[0] + R, c2[0] - R, c2[0] + R])
        exposed = ends[_own_end(ends, c1[0], c2[0], R)]
        out[inside] = np.min(np.abs(p[:, :1] - exposed[None, :]), axis=1)
        return out

    sep = domain.separation
    axis = (c2 - c1) / sep if sep > 0 else np.eye(domain.dimension)[0]
    best = np.full(p.shape[0], INF)
    for c, other, r, away in ((c1, c2, r1, -axis), (c2, c1, r2, axis)):
        direction = np.where(r[:, None] > 0, (p - c) / np.maximum(r, 1e-300)[:, None], away[None, :])
        projection = c + R * direction
        exposed = np.linalg.norm(projection - other, axis=1) >= R
        best = np.where(exposed, np.minimum(best, np.abs(R - r)), best)
    if sep < 2 * R:
        mid = 0.5 * (c1 + c2)
        rim = math.sqrt(R * R - sep * sep / 4.0)
        along = (p - mid) @ axis
        across = np.linalg.norm((p - mid) - along[:, None] * axis[None, :], axis=1)
        best = np.minimum(best, np.hypot(along, across - rim))
    out[inside] = best
    return out


def _own_end(ends: np.ndarray, c1: float, c2: float, R: float) -> np.ndarray:
    # an endpoint of one interval is exposed iff it is not inside the other open interval
    own1 = np.array([True, True, False, False])
    return np.where(own1, np.abs(ends - c2) >= R, np.abs(ends - c1) >= R)


@delta.register
def _(domain: HalfspaceLike, pts: np.ndarray) -> np.ndarray:
    z = pts[:, -1]
    if domain.dimension == 1:
        return np.maximum(0.0, z - domain.a)
    rho = np.linalg.norm(pts[:, :-1], axis=1)
    out = np.zeros(pts.shape[0])
    inside = z > domain.profile(rho)
    if not np.any(inside):
        return out
    rho, z = rho[inside], z[inside]
    w, b = domain.width, domain.b
    flat = np.where(rho >= w, z - b, np.hypot(w - rho, z - b))
    near = rho < w + (z - b)
    best = flat.copy()
    if np.any(near):
        best[near] = np.minimum(flat[near], _bump_distance(domain, rho[near], z[near]))
    out[inside] = best
    return out


def _bump_distance(domain: HalfspaceLike, rho: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Distance from (rho, z) to the curve (s, g(s)), s in [0, width]: grid search then Newton."""
    w = domain.width
    sigma = np.linspace(0.0, w, BUMP_SAMPLES)
    g = domain.profile(sigma)
    dist2 = (sigma[None, :] - rho[:, None]) ** 2 + (g[None, :] - z[:, None]) ** 2
    s = sigma[np.argmin(dist2, axis=1)]
    for _ in range(NEWTON_STEPS):
        gs, g1, g2 = domain.profile(s), domain.profile_slope(s), domain.profile_curvature(s)
        f = (s - rho) + (gs - z) * g1
        fp = 1.0 + g1 * g1 + (gs - z) * g2
        step = np.where(fp > 1e-12, f / np.where(fp > 1e-12, fp, 1.0), 0.0)
        s = np.clip(s - step, 0.0, w)
    refined = np.hypot(s - rho, domain.profile(s) - z)
    return np.minimum(refined, np.sqrt(dist2.min(axis=1)))


# ----------------------------
# Scales and sizes
# ----------------------------
@singledispatch
def c11_scales(domain) -> C11Scales:
    raise InvalidArgumentError(f"unsupported domain {type(domain).__name__}", field="domain")


@c11_scales.register
def _(domain: Ball) -> C11Scales:
    return C11Scales(domain.radius, domain.radius)


@c11_scales.register
def _(domain: ExteriorBall) -> C11Scales:
    return C11Scales(domain.radius, domain.radius, exterior=(domain.radius, domain.radius))


@c11_scales.register
def _(domain: Halfspace) -> C11Scales:
    return C11Scales(INF, INF)


@c11_scales.register
def _(domain: WholeSpace) -> C11Scales:
    return C11Scales(INF, INF)


@c11_scales.register
def _(domain: Interval) -> C11Scales:
    half = (domain.hi - domain.lo) / 2.0
    return C11Scales(half, half)


@c11_scales.register
def _(domain: UnionTwoBalls) -> C11Scales:
    """
    (R, min(R, gap/2)) for disjoint balls, gap = |c1 - c2| - 2R.

    At centres 3R apart this is (R, R/2), not R: the outside ball tangent at the
    point facing the other ball has its diameter inside the gap.
    """
    gap = domain.separation - 2.0 * domain.radius
    if gap <= 1e-12 * domain.radius:
        return C11Scales(0.0, 0.0)
    return C11Scales(domain.radius, min(domain.radius, gap / 2.0))


@c11_scales.register
def _(domain: HalfspaceLike) -> C11Scales:
    if domain.dimension == 1:
        return C11Scales(INF, INF)
    r = domain.width**2 / (4.0 * (domain.a - domain.b))
    return C11Scales(r, r)


def inradius(domain: Domain) -> float:
    if isinstance(domain, Ball):
        return domain.radius
    if isinstance(domain, Interval):
        return (domain.hi - domain.lo) / 2.0
    if isinstance(domain, UnionTwoBalls):
        return domain.radius
    return INF


def diameter(domain: Domain) -> float:
    if isinstance(domain, Ball):
        return 2.0 * domain.radius
    if isinstance(domain, Interval):
        return domain.hi - domain.lo
    if isinstance(domain, UnionTwoBalls):
        return domain.separation + 2.0 * domain.radius
    return INF


# ----------------------------
# Boundary data
# ----------------------------
@singledispatch
def inward_normal(domain, q: np.ndarray) -> np.ndarray:
    raise InvalidArgumentError(f"no boundary for {type(domain).__name__}", field="domain")


@inward_normal.register
def _(domain: Ball, q: np.ndarray) -> np.ndarray:
    return (np.asarray(domain.center) - q) / domain.radius


@inward_normal.register
def _(domain: ExteriorBall, q: np.ndarray) -> np.ndarray:
    return (q - np.asarray(domain.center)) / domain.radius


@inward_normal.register
def _(domain: Halfspace, q: np.ndarray) -> np.ndarray:
    return np.eye(domain.dimension)[-1]


@inward_normal.register
def _(domain: Interval, q: np.ndarray) -> np.ndarray:
    return np.array([1.0 if abs(q[0] - domain.lo) <= abs(q[0] - domain.hi) else -1.0])


@inward_normal.register
def _(domain: UnionTwoBalls, q: np.ndarray) -> np.ndarray:
    c1, c2 = np.asarray(domain.center1, float), np.asarray(domain.center2, float)
    c = c1 if abs(np.linalg.norm(q - c1) - domain.radius) <= abs(np.linalg.norm(q - c2) - domain.radius) else c2
    return (c - q) / domain.radius


@inward_normal.register
def _(domain: HalfspaceLike, q: np.ndarray) -> np.ndarray:
    if domain.dimension == 1:
        return np.array([1.0])
    rho = float(np.linalg.norm(q[:-1]))
    radial = q[:-1] / rho if rho > 0 else np.zeros(domain.dimension - 1)
    n = np.concatenate((-float(domain.profile_slope(rho)) * radial, [1.0]))
    return n / np.linalg.norm(n)


def inner_outer_balls(domain: Domain, q) -> tuple[tuple[np.ndarray, float], tuple[np.ndarray, float]]:
    """Tangent balls at boundary point q: ((center_in, r_in), (center_out, r_out))."""
    q = np.asarray(q, dtype=float).reshape(-1)
    scales = c11_scales(domain)
    n = inward_normal(domain, q)
    r_in = min(scales.r_in, 1e6)
    r_out = min(scales.r_out, 1e6)
    return (q + r_in * n, r_in), (q - r_out * n, r_out)


def _sphere_directions(d: int, n: int) -> np.ndarray:
    if d == 1:
        return np.array([[-1.0], [1.0]])
    if d == 2:
        angle = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack((np.cos(angle), np.sin(angle)))
    # Fibonacci lattice
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = np.pi * (1.0 + 5.0**0.5) * k
    s = np.sqrt(1.0 - z * z)
    return np.column_stack((s * np.cos(phi), s * np.sin(phi), z))


@singledispatch
def boundary_points(domain, n: int = 64) -> np.ndarray:
    raise InvalidArgumentError(f"no boundary for {type(domain).__name__}", field="domain")


@boundary_points.register(Ball)
@boundary_points.register(ExteriorBall)
def _(domain, n: int = 64) -> np.ndarray:
    return np.asarray(domain.center) + domain.radius * _sphere_directions(domain.dimension, n)


@boundary_points.register
def _(domain: Interval, n: int = 64) -> np.ndarray:
    return np.array([[domain.lo], [domain.hi]])


@boundary_points.register
def _(domain: Halfspace, n: int = 64) -> np.ndarray:
    span = np.linspace(-10.0, 10.0, n)
    pts = np.zeros((n, domain.dimension))
    if domain.dimension > 1:
        pts[:, 0] = span
    pts[:, -1] = domain.level
    return pts


@boundary_points.register
def _(domain: HalfspaceLike, n: int = 64) -> np.ndarray:
    if domain.dimension == 1:
        return np.array([[domain.a]])
    sigma = np.linspace(0.0, 2.0 * domain.width, n)
    pts = np.zeros((n, domain.dimension))
    pts[:, 0] = sigma
    pts[:, -1] = domain.profile(sigma)
    return pts


@boundary_points.register
def _(domain: UnionTwoBalls, n: int = 64) -> np.ndarray:
    out = []
    for c, other in ((domain.center1, domain.center2), (domain.center2, domain.center1)):
        pts = np.asarray(c) + domain.radius * _sphere_directions(domain.dimension, n)
        out.append(pts[np.linalg.norm(pts - np.asarray(other), axis=1) >= domain.radius])
    return np.vstack(out)


# ----------------------------
# I(r), J(r)
# ----------------------------
def script_IJ(model: ProcessModel, table: RenewalTable, r: float, resolution: int = 200) -> IJ:
    """
    I(r) = inf_{rho <= r/2} nu(B_r minus B_rho) V^2(rho) and
    J(r) = inf_{rho <= r} nu(B_rho^c) V^2(rho) over log-spaced rho from r/10^4.
    """
    if not r > 0:
        raise InvalidArgumentError("r must be positive", field="r")
    tail_r = pm.tail_mass(model, r)
    rho_i = np.geomspace(r * 1e-4, r / 2.0, resolution)
    rho_j = np.geomspace(r * 1e-4, r, resolution)
    tails_i = np.array([pm.tail_mass(model, float(p)) for p in rho_i])
    tails_j = np.array([pm.tail_mass(model, float(p)) for p in rho_j])
    i_values = (tails_i - tail_r) * table.V(rho_i) ** 2
    j_values = tails_j * table.V(rho_j) ** 2
    ki, kj = int(np.argmin(i_values)), int(np.argmin(j_values))
    return IJ(
        I=float(i_values[ki]),
        J=float(j_values[kj]),
        argmin_I=float(rho_i[ki]),
        argmin_J=float(rho_j[kj]),
        resolution=resolution,
    )


@singledispatch
def point_at_distance(domain, distance: float) -> np.ndarray:
    """A point x of D with delta_D(x) = distance, along the first axis or the last for halfspaces."""
    raise InvalidArgumentError(f"no reference point for {type(domain).__name__}", field="domain")


@point_at_distance.register
def _(domain: Ball, distance: float) -> np.ndarray:
    if not 0 < distance <= domain.radius:
        raise InvalidArgumentError(f"distance must lie in (0, {domain.radius:g}]", field="distance")
    return np.asarray(domain.center, float) + (domain.radius - distance) * np.eye(domain.dimension)[0]


@point_at_distance.register
def _(domain: ExteriorBall, distance: float) -> np.ndarray:
    return np.asarray(domain.center, float) + (domain.radius + distance) * np.eye(domain.dimension)[0]


@point_at_distance.register
def _(domain: Halfspace, distance: float) -> np.ndarray:
    return (domain.level + distance) * np.eye(domain.dimension)[-1]


@point_at_distance.register
def _(domain: HalfspaceLike, distance: float) -> np.ndarray:
    # far from the bump the boundary is flat at height b
    x = np.zeros(domain.dimension)
    if domain.dimension == 1:
        x[0] = domain.a + distance
        return x
    x[0] = domain.width + distance + 1.0
    x[-1] = domain.b + distance
    return x


@point_at_distance.register
def _(domain: Interval, distance: float) -> np.ndarray:
    if not 0 < distance <= (domain.hi - domain.lo) / 2.0:
        raise InvalidArgumentError("distance exceeds the interval half-length", field="distance")
    return np.array([domain.lo + distance])


@point_at_distance.register
def _(domain: UnionTwoBalls, distance: float) -> np.ndarray:
    if not 0 < distance <= domain.radius:
        raise InvalidArgumentError(f"distance must lie in (0, {domain.radius:g}]", field="distance")
    c1, c2 = np.asarray(domain.center1, float), np.asarray(domain.center2, float)
    away = (c1 - c2) / domain.separation if domain.separation > 0 else np.eye(domain.dimension)[0]
    return c1 + (domain.radius - distance) * away
