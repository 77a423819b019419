"""
Two-sided survival and Dirichlet heat kernel envelopes per geometry and regime.
"""
from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np

from ..errors import InvalidArgumentError, UnsupportedRegimeError
from ..models import (
    UNIT_PROFILE,
    Ball,
    ConstantProfile,
    Domain,
    EigenBracket,
    Envelope,
    ExitTimeEnvelope,
    ExteriorBall,
    Factorization,
    Halfspace,
    HalfspaceLike,
    Interval,
    ProcessModel,
    RenewalTable,
    SurvivalEnvelope,
    UnionTwoBalls,
    WholeSpace,
)
from . import free_kernel as fk
from . import geometry as geo
from . import process_models as pm

logger = logging.getLogger(__name__)

BOUNDED = (Ball, Interval, UnionTwoBalls)
HALFSPACES = (Halfspace, HalfspaceLike)


# ----------------------------
# Hypotheses and factors
# ----------------------------
def _require_global_scaling(model: ProcessModel, domain: Domain) -> None:
    if model.theta > 0:
        raise UnsupportedRegimeError(
            f"{domain.kind} estimates need global scaling; model scales only above theta={model.theta:g}",
            hypothesis="global WLSC and WUSC",
        )
    scaling = pm.verify_scaling(model)
    if not scaling.is_global:
        raise UnsupportedRegimeError(f"{domain.kind} estimates need global scaling", hypothesis="global WLSC and WUSC")
    if isinstance(domain, ExteriorBall) and not model.dimension > scaling.alpha_up:
        raise UnsupportedRegimeError(
            f"exterior estimates need d > alpha_up ({model.dimension} <= {scaling.alpha_up:.3f})",
            hypothesis="d > alpha_up",
        )


def check_hypotheses(model: ProcessModel, domain: Domain) -> None:
    if isinstance(domain, HALFSPACES + (ExteriorBall,)):
        _require_global_scaling(model, domain)


def scale_of(domain: Domain) -> float:
    """Radius r entering V(r) in the bounded-domain factor."""
    scales = geo.c11_scales(domain)
    if scales.scale > 0:
        return scales.scale
    return geo.inradius(domain)


def survival_factor(table: RenewalTable, domain: Domain, t: float, x) -> float:
    """
    V(delta)/sqrt(t) ^ 1 on halfspaces, V(delta)/(sqrt(t) ^ V(R1)) ^ 1 outside a
    ball, V(delta)/(sqrt(t) ^ V(r)) ^ 1 on bounded sets at scale r.
    """
    if isinstance(domain, WholeSpace):
        return 1.0
    d = geo.dist_to_complement(domain, x)
    if d <= 0:
        return 0.0
    root = math.sqrt(t)
    if isinstance(domain, HALFSPACES):
        cap = root
    elif isinstance(domain, ExteriorBall):
        cap = min(root, table.V(geo.c11_scales(domain).exterior[0]))
    else:
        cap = min(root, table.V(scale_of(domain)))
    return min(table.V(d) / cap, 1.0)


def _regime(domain: Domain, table: RenewalTable, t: float) -> str:
    if isinstance(domain, UnionTwoBalls) and geo.c11_scales(domain).scale == 0:
        return "lower-only"
    if isinstance(domain, BOUNDED):
        return "small-time" if t <= table.V(scale_of(domain)) ** 2 else "large-time"
    return "all-time"


def _rates(bracket: EigenBracket, rate: Optional[float]) -> tuple[float, float, float]:
    """(slow, structural, fast) decay rates; a fitted rate widens the bracket if needed."""
    if rate is None:
        return bracket.lambda_low, bracket.midpoint, bracket.lambda_high
    return min(bracket.lambda_low, rate), rate, max(bracket.lambda_high, rate)


# ----------------------------
# Survival probability
# ----------------------------
def survival_envelope(
        model: ProcessModel,
        table: RenewalTable,
        domain: Domain,
        t: float,
        x,
        profile: ConstantProfile = UNIT_PROFILE,
        rate: Optional[float] = None,
) -> SurvivalEnvelope:
    """
    Envelope of P^x(tau_D > t). Bounded sets carry e^(-lambda t): the structural
    value uses the bracket midpoint (or `rate`), the upper side lambda_low and the
    lower side lambda_high.
    """
    if not t > 0:
        raise InvalidArgumentError("t must be positive", field="t")
    check_hypotheses(model, domain)
    factor = survival_factor(table, domain, t, x)
    regime = _regime(domain, table, t)
    low, up = profile.survival_low, profile.survival_up
    if isinstance(domain, ExteriorBall):
        r1, r2 = geo.c11_scales(domain).exterior
        low *= (r1 / r2) ** 2

    if not isinstance(domain, BOUNDED):
        return SurvivalEnvelope(
            factor=factor, structural=factor, lower=low * factor, upper=up * factor, regime=regime,
            geometry=domain.kind,
        )

    slow, mid, fast = _rates(eigen_bracket(model, table, domain, profile), rate)
    structural = factor * math.exp(-mid * t)
    upper = math.inf if regime == "lower-only" else up * factor * math.exp(-slow * t)
    return SurvivalEnvelope(
        factor=factor,
        structural=structural,
        lower=low * factor * math.exp(-fast * t),
        upper=upper,
        regime=regime,
        geometry=domain.kind,
        rate=mid,
    )


# ----------------------------
# Dirichlet heat kernel
# ----------------------------
def heat_kernel_factorization(
        model: ProcessModel,
        table: RenewalTable,
        domain: Domain,
        t: float,
        x,
        y,
        profile: ConstantProfile = UNIT_PROFILE,
        rate: Optional[float] = None,
) -> Factorization:
    """
    F = phi(t, x) phi(t, y) p(t ^ t0, |x - y|), times e^(-lambda t) on bounded sets,
    with t0 = V^2(r) (infinite for unbounded sets).
    """
    if not t > 0:
        raise InvalidArgumentError("t must be positive", field="t")
    check_hypotheses(model, domain)
    regime = _regime(domain, table, t)
    fx = survival_factor(table, domain, t, x)
    fy = survival_factor(table, domain, t, y)
    if fx == 0.0 or fy == 0.0:
        return Factorization(0.0, Envelope(0.0, 0.0, profile.name), regime, domain.kind, (fx, fy), 0.0)

    px = geo.as_points(domain, x)[0]
    py = geo.as_points(domain, y)[0]
    distance = float(np.linalg.norm(px - py))
    bounded = isinstance(domain, BOUNDED)
    t_kernel = min(t, table.V(scale_of(domain)) ** 2) if bounded else t
    kernel = fk.p_free(model, t_kernel, distance)
    value = fx * fy * kernel
    low, up = profile.factor_low, profile.factor_up
    if isinstance(domain, ExteriorBall):
        r1, r2 = geo.c11_scales(domain).exterior
        low *= (r1 / r2) ** (4 + 2 * model.dimension)

    lower, upper = low * value, up * value
    if bounded:
        slow, mid, fast = _rates(eigen_bracket(model, table, domain, profile), rate)
        value *= math.exp(-mid * t)
        lower *= math.exp(-fast * t)
        upper *= math.exp(-slow * t)
    if regime == "lower-only":
        upper = math.inf
    return Factorization(
        value=value,
        envelope=Envelope(lower, upper, profile.name),
        regime=regime,
        geometry=domain.kind,
        factors=(fx, fy),
        kernel=kernel,
    )


# ----------------------------
# Eigenvalue and exit time
# ----------------------------
def _require_bounded(domain: Domain, what: str) -> None:
    if not isinstance(domain, BOUNDED):
        raise UnsupportedRegimeError(f"{what} needs a bounded domain, got {domain.kind}", hypothesis="bounded domain")


def eigen_bracket(
        model: ProcessModel,
        table: RenewalTable,
        domain: Domain,
        profile: ConstantProfile = UNIT_PROFILE,
) -> EigenBracket:
    """
    lambda_low = (r/diam)^2 / (8 V^2(r)), lambda_high = C1 (diam/r)^(d/2) / V^2(r),
    plus the exit-time rate 1 / (2 V^2(diam)).
    """
    _require_bounded(domain, "eigenvalue bracket")
    r, diam = geo.inradius(domain), geo.diameter(domain)
    v2 = table.V(r) ** 2
    d = model.dimension
    return EigenBracket(
        lambda_low=(r / diam) ** 2 / (8.0 * v2),
        lambda_high=profile.exit_C1 * (diam / r) ** (d / 2.0) / v2,
        inradius=r,
        diameter=diam,
        lambda_low_exit=1.0 / (2.0 * table.V(diam) ** 2),
    )


def exit_time_envelope(
        model: ProcessModel,
        table: RenewalTable,
        domain: Domain,
        x,
        profile: ConstantProfile = UNIT_PROFILE,
) -> ExitTimeEnvelope:
    """V^2(delta ^ inradius) / C1 <= E^x tau_D <= 2 V^2(diam D)"""
    _require_bounded(domain, "exit-time envelope")
    d = geo.dist_to_complement(domain, x)
    if d <= 0:
        return ExitTimeEnvelope(0.0, 0.0, 0.0)
    usable = min(d, geo.inradius(domain))
    return ExitTimeEnvelope(
        lower=table.V(usable) ** 2 / profile.exit_C1,
        upper=2.0 * table.V(geo.diameter(domain)) ** 2,
        usable_radius=usable,
    )


# ----------------------------
# Structural inequalities
# ----------------------------
def v_product_bracket(table: RenewalTable, r: float, lam: float, t: float, t0: float) -> tuple[float, float, float]:
    """
    (lower, middle, upper) of
    (V(r)/sqrt(t0) ^ 1)(V(r + lam r0)/sqrt(t) ^ 1) / (lam + 2) <= V(r)/sqrt(t) ^ 1
        <= (V(r)/sqrt(t0) ^ 1)(V(r + lam r0)/sqrt(t) ^ 1),
    r0 = V^-1(sqrt(t0)), for t > t0 and lam >= 1.
    """
    if not (t > t0 > 0 and lam >= 1 and r > 0):
        raise InvalidArgumentError("need t > t0 > 0, lam >= 1 and r > 0", field="t")
    r0 = table.Vinverse(math.sqrt(t0))
    middle = min(table.V(r) / math.sqrt(t), 1.0)
    upper = min(table.V(r) / math.sqrt(t0), 1.0) * min(table.V(r + lam * r0) / math.sqrt(t), 1.0)
    return upper / (lam + 2.0), middle, upper


def chapman_kolmogorov_bound(model: ProcessModel, t: float, survival: float) -> float:
    """p_D(t, x, y) <= p_{t/2}(0) P^x(tau_D > t/2)"""
    return fk.p0(model, t / 2.0) * survival
