"""
Validation campaigns: every check compares a computed or simulated quantity
with its structural expression over the configured grids and records the
extreme ratios in one report row.
"""
from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import special, stats

from ..config import settings
from ..errors import (
    AccuracyWarning,
    InvalidArgumentError,
    RegimeError,
    ScalingViolatedError,
    SimulationWarning,
    TableRangeError,
    UnsupportedRegimeError,
)
from ..models import (
    Ball,
    ConstantProfile,
    Domain,
    Interval,
    PresetKind,
    ProcessModel,
    RenewalTable,
    ReportRow,
    SeriesTable,
    SimConfig,
    ValidationReport,
    WholeSpace,
)
from ..processors import dirichlet_bounds as dp
from ..processors import free_kernel as fk
from ..processors import geometry as geo
from ..processors import process_models as pm
from ..processors import simulator as sim
from ..processors.renewal import build_renewal_table, normalization_for
from ..schemas.campaign import CampaignConfig
from .config_loader import LoadedCampaign
from .plotdata import write_all_series
from .profiles import get_profile
from .tables_io import write_renewal_table, write_report_csv, write_summary

logger = logging.getLogger(__name__)

ORACLE_CEILING = 1.0001
FIT_POINTS = 8
SIGMA3 = 3.0 / sim.Z95
REFINEMENT = 0.5
V_PRODUCT_LAMBDAS = (1.0, 2.0, 4.0)
MASS_TOLERANCE = 1e-3
CONVOLUTION_TOLERANCE = 1e-3


@dataclass(frozen=True)
class CampaignContext:
    config: CampaignConfig
    model: ProcessModel
    domain: Domain
    table: RenewalTable
    profile: ConstantProfile
    config_hash: str

    @property
    def grids(self):
        return self.config.grids

    @property
    def sim(self) -> SimConfig:
        return self.config.simulation.sim_config(self.config.seed)


@dataclass
class CheckResult:
    grid: str
    ratios: np.ndarray
    ceiling: float
    series: SeriesTable
    passed: Optional[bool] = None
    notes: list[str] = field(default_factory=list)


# ----------------------------
# Setup
# ----------------------------
def build_context(loaded: LoadedCampaign) -> CampaignContext:
    config = loaded.config
    model = config.model.build()
    domain = config.build_domain()
    normalization = config.renewal.normalization
    if normalization == "power":
        normalization = normalization_for(model, power=True)
    table = build_renewal_table(model, config.renewal.backend, config.renewal.grid, normalization=normalization)
    return CampaignContext(
        config=config,
        model=model,
        domain=domain,
        table=table,
        profile=get_profile(config.profile),
        config_hash=loaded.config_hash,
    )


def _metadata(ctx: CampaignContext) -> dict[str, str]:
    return {
        "model": ctx.model.fingerprint,
        "domain": repr(ctx.domain),
        "seed": str(ctx.config.seed),
        "profile": ctx.profile.name,
        "renewal": f"{ctx.table.backend} {ctx.table.grid.describe() if ctx.table.grid else ''}".strip(),
        "config_hash": ctx.config_hash,
    }


def _start(ctx: CampaignContext, distance: float):
    try:
        return geo.point_at_distance(ctx.domain, distance)
    except InvalidArgumentError as exc:
        logger.info("skipping distance %g: %s", distance, exc)
        return None


def _center(ctx: CampaignContext):
    return geo.point_at_distance(ctx.domain, geo.inradius(ctx.domain))


def _starts(ctx: CampaignContext) -> list:
    if isinstance(ctx.domain, WholeSpace):
        return [np.zeros(ctx.model.dimension)]
    return [p for p in (_start(ctx, s) for s in ctx.grids.distances) if p is not None]


def _enlarged(domain: Domain) -> Domain:
    """The domain doubled about its center."""
    if isinstance(domain, Interval):
        mid, half = 0.5 * (domain.lo + domain.hi), 0.5 * (domain.hi - domain.lo)
        return Interval(mid - 2.0 * half, mid + 2.0 * half)
    if isinstance(domain, Ball):
        return Ball(domain.dimension, domain.center, 2.0 * domain.radius)
    raise UnsupportedRegimeError("domain monotonicity compares concentric balls", hypothesis="D is a ball")


def _segment(domain: Domain) -> tuple[float, float]:
    if isinstance(domain, Interval):
        return domain.lo, domain.hi
    return domain.center[0] - domain.radius, domain.center[0] + domain.radius


def _ratios(estimates, references) -> np.ndarray:
    estimates, references = np.asarray(estimates, float), np.asarray(references, float)
    keep = (estimates > 0) & (references > 0)
    return estimates[keep] / references[keep]


# ----------------------------
# Checks
# ----------------------------
def check_free_kernel_oracle(ctx: CampaignContext) -> CheckResult:
    """p_free against the Cauchy density Gamma((d+1)/2) pi^-(d+1)/2 t / (t^2 + r^2)^((d+1)/2)."""
    model = ctx.model
    if model.kind is not PresetKind.STABLE or model.param("alpha") != 1.0:
        raise UnsupportedRegimeError("closed-form oracle exists for the Cauchy preset only", hypothesis="alpha = 1")
    d = model.dimension
    pairs = [(t, r) for t in ctx.grids.times for r in ctx.grids.radii]
    density = fk.p_free_grid(model, pairs)
    c = special.gamma((d + 1) / 2.0) / math.pi ** ((d + 1) / 2.0)
    oracle = np.array([c * t / (t * t + r * r) ** ((d + 1) / 2.0) for t, r in pairs])
    ratios = density / oracle
    ceiling = ctx.grids.ceiling_for("free-kernel-oracle", ORACLE_CEILING)
    worst = float(max(ratios.max(), 1.0 / ratios.min()))
    return CheckResult(
        grid=f"t {_span(ctx.grids.times)} x r {_span(ctx.grids.radii)}",
        ratios=ratios,
        ceiling=ceiling,
        series=SeriesTable(
            columns=("t", "r", "p_free", "oracle"),
            units=("time", "length", "density", "density"),
            rows=tuple((t, r, p, o) for (t, r), p, o in zip(pairs, density, oracle)),
        ),
        passed=worst <= ceiling,
        notes=[f"max relative error {worst - 1.0:.2e}"],
    )


def check_envelope_sandwich(ctx: CampaignContext) -> CheckResult:
    """p_free over min{[V^-1(sqrt t)]^-d, t / (V^2(r) r^d)} on the scaling window."""
    model, table = ctx.model, ctx.table
    notes = []
    try:
        pm.verify_scaling(model)
    except ScalingViolatedError as exc:
        return CheckResult(
            grid="scaling grid",
            ratios=np.array([]),
            ceiling=ctx.grids.ceiling,
            series=SeriesTable(("r", "p_free", "env_lower", "env_upper"), ("length", "density", "density", "density")),
            passed=False,
            notes=[f"scaling violated at {exc.worst_pair}"],
        )
    window = fk.scaling_window(model, table)
    pairs = [
        (t, r) for t in ctx.grids.times for r in ctx.grids.radii
        if window is None or (t < window[0] and r < window[1])
    ]
    if not pairs:
        raise RegimeError("no grid point inside the scaling window", window=window or (0.0, 0.0))
    if window is not None:
        notes.append(f"window t < {window[0]:.3g}, r < {window[1]:.3g}")
    density = fk.p_free_grid(model, pairs)
    envelopes = [fk.p_free_envelope(model, table, t, r, ctx.profile) for t, r in pairs]
    expression = np.array([e.expression for e in envelopes])
    return CheckResult(
        grid=f"t {_span(ctx.grids.times)} x r {_span(ctx.grids.radii)} ({len(pairs)} points)",
        ratios=density / expression,
        ceiling=ctx.grids.ceiling_for("envelope-sandwich"),
        series=SeriesTable(
            columns=("r", "p_free", "env_lower", "env_upper"),
            units=("length", "density", "density", "density"),
            rows=tuple((r, p, e.lower, e.upper) for (_, r), p, e in zip(pairs, density, envelopes)),
        ),
        notes=notes,
    )


def check_survival_factorization(ctx: CampaignContext) -> CheckResult:
    """Empirical P^x(tau_D > t) over the structural survival factor."""
    model, table, domain = ctx.model, ctx.table, ctx.domain
    if isinstance(domain, WholeSpace):
        raise UnsupportedRegimeError("survival needs a proper domain", hypothesis="D != R^d")
    dp.check_hypotheses(model, domain)
    times = ctx.grids.times
    estimates, references, rows = [], [], []
    for distance in ctx.grids.distances:
        x = _start(ctx, distance)
        if x is None:
            continue
        empirical = sim.empirical_survival(model, domain, x, times, ctx.sim)
        for t, stat in zip(times, empirical):
            envelope = dp.survival_envelope(model, table, domain, t, x, ctx.profile)
            estimates.append(stat.estimate)
            references.append(envelope.structural)
            rows.append((t, float(x[0]), stat.estimate, envelope.lower, envelope.upper))
    ratios = _ratios(estimates, references)
    notes = []
    if len(ratios) < len(estimates):
        notes.append(f"{len(estimates) - len(ratios)} cells without survivors")
    return CheckResult(
        grid=f"delta {_span(ctx.grids.distances)} x t {_span(times)}, n={ctx.sim.n_paths}",
        ratios=ratios,
        ceiling=ctx.grids.ceiling_for("survival-factorization"),
        series=SeriesTable(
            columns=("t", "x", "empirical", "lower", "upper"),
            units=("time", "length", "probability", "probability", "probability"),
            rows=tuple(rows),
        ),
        notes=notes,
    )


def check_kernel_factorization(ctx: CampaignContext) -> CheckResult:
    """Histogram of p_D(t, x, .) in windows of width `bin_width` around y, over F(t, x, y)."""
    model, table, domain = ctx.model, ctx.table, ctx.domain
    if model.dimension != 1 or isinstance(domain, WholeSpace):
        raise UnsupportedRegimeError("kernel histograms are one-dimensional", hypothesis="d = 1 and D != R")
    dp.check_hypotheses(model, domain)
    half = ctx.grids.bin_width / 2.0
    points = [p for p in (_start(ctx, s) for s in ctx.grids.points) if p is not None]
    targets = [y for y in points if geo.dist_to_complement(domain, y) > half]
    estimates, references, rows = [], [], []
    cfg = ctx.sim
    for x in points:
        for t in ctx.grids.times:
            batch = sim.run_paths(model, domain, x, t, cfg)
            alive = batch.final_position[~np.isnan(batch.final_position[:, 0]), 0]
            for y in targets:
                count = int(np.count_nonzero(np.abs(alive - y[0]) < half))
                stat = sim.poisson_bin(count, batch.n_paths, 2.0 * half, cfg.seed)
                f = dp.heat_kernel_factorization(model, table, domain, t, x, y, ctx.profile)
                estimates.append(stat.estimate)
                references.append(f.value)
                rows.append((t, float(x[0]), float(y[0]), stat.estimate, f.value, f.envelope.lower, f.envelope.upper))
    return CheckResult(
        grid=f"{len(points)}x{len(targets)} points x t {_span(ctx.grids.times)}, bin {ctx.grids.bin_width:g}",
        ratios=_ratios(estimates, references),
        ceiling=ctx.grids.ceiling_for("kernel-factorization"),
        series=SeriesTable(
            columns=("t", "x", "y", "empirical", "F", "lower", "upper"),
            units=("time", "length", "length", "density", "density", "density", "density"),
            rows=tuple(rows),
        ),
    )


def check_eigen_bracket(ctx: CampaignContext) -> CheckResult:
    """Log-linear fit of empirical survival on [3 t0, 10 t0] against the eigenvalue bracket."""
    model, table, domain = ctx.model, ctx.table, ctx.domain
    bracket = dp.eigen_bracket(model, table, domain, ctx.profile)
    t0 = table.V(bracket.inradius) ** 2
    times = np.linspace(3.0 * t0, 10.0 * t0, FIT_POINTS)
    x = _center(ctx)
    empirical = sim.empirical_survival(model, domain, x, times, ctx.sim)
    values = np.array([s.estimate for s in empirical])
    keep = values > 0
    if keep.sum() < 3:
        return CheckResult(
            grid=f"t in [{times[0]:.3g}, {times[-1]:.3g}] x {FIT_POINTS}",
            ratios=np.array([]),
            ceiling=bracket.lambda_high / bracket.lambda_low,
            series=SeriesTable(("t", "empirical", "fit"), ("time", "probability", "probability")),
            passed=False,
            notes=["survival vanished before the fit window; raise n_paths"],
        )
    fit = stats.linregress(times[keep], np.log(values[keep]))
    rate = -float(fit.slope)
    spread = sim.Z95 * float(fit.stderr)
    series_rows = [(t, v, math.exp(fit.intercept + fit.slope * t)) for t, v in zip(times, values)]
    return CheckResult(
        grid=f"t in [{times[0]:.3g}, {times[-1]:.3g}] x {FIT_POINTS}",
        ratios=np.array([rate / bracket.lambda_high, rate / bracket.lambda_low]),
        ceiling=bracket.lambda_high / bracket.lambda_low,
        series=SeriesTable(("t", "empirical", "fit"), ("time", "probability", "probability"), tuple(series_rows)),
        passed=bracket.contains(rate),
        notes=[
            f"rate {rate:.4g} +/- {spread:.2g}",
            f"bracket [{bracket.lambda_low:.4g}, {bracket.lambda_high:.4g}]",
        ],
    )


def check_overshoot(ctx: CampaignContext) -> CheckResult:
    """P^x(|X_tau - x| >= r) against E^x tau / V^2(r) from the same paths."""
    model, table, domain = ctx.model, ctx.table, ctx.domain
    if not isinstance(domain, (Ball, Interval)):
        raise UnsupportedRegimeError("overshoot check runs on balls", hypothesis="D is a ball")
    x = _center(ctx)
    outer = geo.inradius(domain)
    radii = [r for r in ctx.grids.radii if r > outer] or [2.0 * outer, 4.0 * outer, 8.0 * outer]
    t_max = ctx.config.simulation.t_max
    batch = sim.run_paths(model, domain, x, t_max, ctx.sim)
    exit_time = sim.exit_time_stats(batch, t_max, ctx.sim.seed)
    estimates, bounds = [], []
    for r in radii:
        estimates.append(sim.overshoot_stats(batch, r, ctx.sim.seed, center=x).estimate)
        bounds.append(exit_time.estimate / table.V(r) ** 2)
    envelope = dp.exit_time_envelope(model, table, domain, x, ctx.profile)
    ratios = np.asarray(estimates) / np.asarray(bounds)
    ceiling = ctx.grids.ceiling_for("overshoot")
    return CheckResult(
        grid=f"r {_span(radii)}, t_max {t_max:g}",
        ratios=ratios,
        ceiling=ceiling,
        series=SeriesTable(
            columns=("r", "overshoot", "bound"),
            units=("length", "probability", "probability"),
            rows=tuple(zip(radii, estimates, bounds)),
        ),
        passed=bool(ratios.max() <= ceiling),
        notes=[
            f"E tau {exit_time.estimate:.4g} +/- {exit_time.half_width:.2g}",
            f"envelope [{envelope.lower:.4g}, {envelope.upper:.4g}]",
        ],
    )


def check_ikeda_watanabe(ctx: CampaignContext) -> CheckResult:
    """Jump exits into bins right of an interval against occupation time convolved with nu."""
    model, domain = ctx.model, ctx.domain
    if not isinstance(domain, Interval):
        raise UnsupportedRegimeError("occupation densities are tabulated on intervals", hypothesis="D is an interval")
    length = domain.hi - domain.lo
    edges = np.linspace(domain.lo, domain.hi, 21)
    exit_edges = domain.hi + length * np.array([0.05, 0.25, 0.5, 1.0, 2.0])
    x = _center(ctx)
    cfg = ctx.sim
    density, batch = sim.occupation(model, domain, x, edges, cfg, ctx.config.simulation.t_max)
    predicted = sim.ikeda_watanabe_prediction(model, density, edges, exit_edges, cfg.epsilon)
    jumped = batch.kind == sim.EXIT_JUMP
    landing = batch.exit_position[jumped, 0]
    counts, _ = np.histogram(landing, bins=exit_edges)
    empirical = counts / batch.n_paths
    centers = 0.5 * (exit_edges[1:] + exit_edges[:-1])
    return CheckResult(
        grid=f"20 occupation bins, exit bins {_span(exit_edges)}",
        ratios=_ratios(empirical, predicted),
        ceiling=ctx.grids.ceiling_for("ikeda-watanabe"),
        series=SeriesTable(
            columns=("y", "empirical", "predicted"),
            units=("length", "probability", "probability"),
            rows=tuple(zip(centers, empirical, predicted)),
        ),
    )


def check_free_kernel_agreement(ctx: CampaignContext) -> CheckResult:
    """
    Unkilled paths from the origin binned by |X_t| against p_free(t, r). A bin
    agrees when it is within 3 sigma plus the variation of p_free across it.
    """
    model = ctx.model
    d = model.dimension
    half = ctx.grids.bin_width / 2.0
    cfg = ctx.sim
    pairs = [(t, r) for t in ctx.grids.times for r in ctx.grids.radii]
    density = fk.p_free_grid(model, pairs)
    near = fk.p_free_grid(model, [(t, max(r - half, 0.0)) for t, r in pairs])
    far = fk.p_free_grid(model, [(t, r + half) for t, r in pairs])

    binned = []
    for t in ctx.grids.times:
        batch = sim.run_paths(model, WholeSpace(d), np.zeros(d), t, cfg)
        values = np.linalg.norm(batch.final_position, axis=1)
        for r in ctx.grids.radii:
            a, b = max(r - half, 0.0), r + half
            count = int(np.count_nonzero((values >= a) & (values < b)))
            # d = 1 folds both sides of the origin into one bin
            volume = 2.0 * (b - a) if d == 1 else float(sim.bin_volumes(np.array([a, b]), d, radial=True)[0])
            binned.append(sim.poisson_bin(count, batch.n_paths, volume, cfg.seed))

    rows, misses = [], 0
    for (t, r), stat, p, lo, hi in zip(pairs, binned, density, near, far):
        tolerance = SIGMA3 * stat.half_width + max(abs(lo - p), abs(hi - p))
        misses += abs(stat.estimate - p) > tolerance
        rows.append((t, r, stat.estimate, p, tolerance))
    return CheckResult(
        grid=f"t {_span(ctx.grids.times)} x r {_span(ctx.grids.radii)}, bin {ctx.grids.bin_width:g}, n={cfg.n_paths}",
        ratios=_ratios([s.estimate for s in binned], density),
        ceiling=ctx.grids.ceiling_for("free-kernel-agreement"),
        series=SeriesTable(
            columns=("t", "r", "empirical", "p_free", "tolerance"),
            units=("time", "length", "density", "density", "density"),
            rows=tuple(rows),
        ),
        passed=misses == 0,
        notes=[f"{misses} of {len(pairs)} bins outside tolerance"] if misses else [],
    )


def check_free_kernel_mass(ctx: CampaignContext) -> CheckResult:
    """int p_t(x) dx = 1 for every t on the grid."""
    times = ctx.grids.times
    masses = np.array([fk.free_mass(ctx.model, t) for t in times])
    worst = float(np.max(np.abs(masses - 1.0)))
    return CheckResult(
        grid=f"t {_span(times)}",
        ratios=masses,
        ceiling=ctx.grids.ceiling_for("free-kernel-mass", 1.0 + MASS_TOLERANCE),
        series=SeriesTable(("t", "mass"), ("time", "probability"), tuple(zip(times, masses))),
        passed=worst <= MASS_TOLERANCE,
        notes=[f"max mass defect {worst:.2e}"],
    )


def check_free_chapman_kolmogorov(ctx: CampaignContext) -> CheckResult:
    """p_2t(x) against the numerical self-convolution of p_t, at x = 0 and the grid points."""
    model = ctx.model
    if model.dimension != 1:
        raise UnsupportedRegimeError("the convolution is tabulated in d = 1", hypothesis="d = 1")
    points = [0.0] + list(ctx.grids.points)
    rows, ratios = [], []
    for t in ctx.grids.times:
        direct, convolved = fk.free_convolution(model, t, points)
        ratios.extend(direct / convolved)
        rows.extend((t, x, p, c) for x, p, c in zip(points, direct, convolved))
    ratios = np.asarray(ratios)
    worst = float(np.max(np.abs(ratios - 1.0)))
    return CheckResult(
        grid=f"t {_span(ctx.grids.times)} x x {_span(points)}",
        ratios=ratios,
        ceiling=ctx.grids.ceiling_for("free-chapman-kolmogorov", 1.0 + CONVOLUTION_TOLERANCE),
        series=SeriesTable(
            columns=("t", "x", "p_2t", "convolution"),
            units=("time", "length", "density", "density"),
            rows=tuple(rows),
        ),
        passed=worst <= CONVOLUTION_TOLERANCE,
        notes=[f"max relative defect {worst:.2e}"],
    )


def check_ub_product(ctx: CampaignContext) -> CheckResult:
    """Histogram of p_D(t, x, .) against p_{t/2}(0) P^x(tau_D > t/2) from the same paths."""
    model, domain = ctx.model, ctx.domain
    d = model.dimension
    width = ctx.grids.bin_width
    cfg = ctx.sim
    estimates, references, rows, misses = [], [], [], 0
    for x in _starts(ctx):
        x = np.asarray(x, dtype=float)
        edges = x[0] + width * np.arange(-5, 6) if d == 1 else width * np.arange(0, 6)
        for t in ctx.grids.times:
            batch = sim.run_paths(model, domain, x, t, cfg)
            survival = sim.wilson(int(np.count_nonzero(batch.tau > t / 2.0)), batch.n_paths, cfg.seed, "survival")
            bound = dp.chapman_kolmogorov_bound(model, t, survival.estimate)
            slack = dp.chapman_kolmogorov_bound(model, t, survival.half_width)
            bins = sim.histogram_stats(batch, domain, x, edges, cfg.seed)
            for stat in bins:
                misses += stat.estimate > bound + SIGMA3 * (stat.half_width + slack)
                estimates.append(stat.estimate)
                references.append(bound)
            rows.append((t, float(x[0]), max(s.estimate for s in bins), bound))
    return CheckResult(
        grid=f"{len(rows) // max(len(ctx.grids.times), 1)} starts x t {_span(ctx.grids.times)}, bin {width:g}",
        ratios=_ratios(estimates, references),
        ceiling=ctx.grids.ceiling_for("ub-product", 1.0),
        series=SeriesTable(
            columns=("t", "x", "max_empirical", "bound"),
            units=("time", "length", "density", "density"),
            rows=tuple(rows),
        ),
        passed=misses == 0,
        notes=[f"{misses} bins above the bound"] if misses else [],
    )


def check_killed_chapman_kolmogorov(ctx: CampaignContext) -> CheckResult:
    """
    Histogram of p_D(2t, x, .) against sum_j p_D(t, x, z_j) p_D(t, z_j, .) |bin j|,
    every factor binned from paths started at the center x or at the bin centers
    z_j. A bin agrees within 3 sigma plus the variation of p_D(t, z, .) across
    half a bin.
    """
    model, domain = ctx.model, ctx.domain
    if model.dimension != 1 or not isinstance(domain, (Interval, Ball)):
        raise UnsupportedRegimeError(
            "the binned convolution runs on one-dimensional segments", hypothesis="d = 1 and D an interval"
        )
    dp.check_hypotheses(model, domain)
    lo, hi = _segment(domain)
    edges = np.linspace(lo, hi, max(int(round((hi - lo) / ctx.grids.bin_width)), 2) + 1)
    widths = np.diff(edges)
    centers = 0.5 * (edges[1:] + edges[:-1])
    x = _center(ctx)
    cfg = ctx.sim

    def binned(start, t: float) -> tuple[np.ndarray, np.ndarray]:
        bins = sim.histogram_stats(sim.run_paths(model, domain, start, t, cfg), domain, start, edges, cfg.seed)
        return np.array([b.estimate for b in bins]), np.array([b.half_width for b in bins])

    direct, convolved, rows, misses = [], [], [], 0
    for t in ctx.grids.times:
        first, first_hw = binned(x, t)
        twice, twice_hw = binned(x, 2.0 * t)
        from_bins = [binned(np.array([z]), t) for z in centers]
        kernel = np.array([k for k, _ in from_bins])
        kernel_hw = np.array([h for _, h in from_bins])
        weights = widths * first
        conv = weights @ kernel
        spread = ((widths * first_hw)[:, None] * kernel) ** 2 + (weights[:, None] * kernel_hw) ** 2
        noise = np.sqrt(spread.sum(axis=0))
        binning = weights @ (0.5 * np.abs(np.gradient(kernel, axis=0)))
        for y, p, c, p_hw, c_hw, b in zip(centers, twice, conv, twice_hw, noise, binning):
            tolerance = SIGMA3 * (p_hw + c_hw) + b
            misses += abs(p - c) > tolerance
            rows.append((t, y, p, c, tolerance))
        direct.extend(twice)
        convolved.extend(conv)
    return CheckResult(
        grid=f"{centers.size} bins x t {_span(ctx.grids.times)}, n={cfg.n_paths}",
        ratios=_ratios(direct, convolved),
        ceiling=ctx.grids.ceiling_for("killed-chapman-kolmogorov"),
        series=SeriesTable(
            columns=("t", "y", "p_D_2t", "convolution", "tolerance"),
            units=("time", "length", "density", "density", "density"),
            rows=tuple(rows),
        ),
        passed=misses == 0,
        notes=[f"{misses} of {len(rows)} bins outside tolerance"] if misses else [],
    )


def check_domain_monotonicity(ctx: CampaignContext) -> CheckResult:
    """p_D <= p_D' bin by bin for D' = D doubled, both driven by the same random numbers."""
    model, domain = ctx.model, ctx.domain
    larger = _enlarged(domain)
    x = np.asarray(_center(ctx), dtype=float)
    reach = geo.inradius(domain)
    if model.dimension == 1:
        edges = np.linspace(x[0] - reach, x[0] + reach, 11)
    else:
        edges = np.linspace(0.0, reach, 6)
    centers = 0.5 * (edges[1:] + edges[:-1])
    cfg = ctx.sim
    inner, outer, rows, misses = [], [], [], 0
    for t in ctx.grids.times:
        small = sim.histogram_stats(sim.run_paths(model, domain, x, t, cfg), domain, x, edges, cfg.seed)
        big = sim.histogram_stats(sim.run_paths(model, larger, x, t, cfg), larger, x, edges, cfg.seed)
        for c, s, b in zip(centers, small, big):
            misses += s.estimate > b.estimate + SIGMA3 * (s.half_width + b.half_width)
            inner.append(s.estimate)
            outer.append(b.estimate)
            rows.append((t, c, s.estimate, b.estimate))
    return CheckResult(
        grid=f"{centers.size} bins x t {_span(ctx.grids.times)}, D' = {larger!r}",
        ratios=_ratios(inner, outer),
        ceiling=ctx.grids.ceiling_for("domain-monotonicity", 1.0),
        series=SeriesTable(
            columns=("t", "y", "p_D", "p_larger"),
            units=("time", "length", "density", "density"),
            rows=tuple(rows),
        ),
        passed=misses == 0,
        notes=[f"{misses} bins where the smaller domain exceeds the larger"] if misses else [],
    )


def check_v_product(ctx: CampaignContext) -> CheckResult:
    """Both sides of the V-product inequality on (t, r, lam) triples with t0 = t/4."""
    table = ctx.table
    radii = [r for r in ctx.grids.radii if r > 0]
    if not radii:
        raise UnsupportedRegimeError("v-product needs a positive radius in grids.radii", hypothesis="r > 0")
    ratios, rows, misses, outside = [], [], 0, 0
    for t in ctx.grids.times:
        for r in radii:
            for lam in V_PRODUCT_LAMBDAS:
                try:
                    lower, middle, upper = dp.v_product_bracket(table, r, lam, t, t / 4.0)
                except TableRangeError:
                    outside += 1
                    continue
                misses += not (lower <= middle * (1.0 + 1e-9) and middle <= upper * (1.0 + 1e-9))
                ratios.append(middle / lower)
                rows.append((t, r, lam, lower, middle, upper))
    notes = []
    if outside:
        notes.append(f"{outside} triples beyond the renewal table")
    if misses:
        notes.append(f"{misses} triples violate the inequality")
    return CheckResult(
        grid=f"t {_span(ctx.grids.times)} x r {_span(radii)} x lam {_span(V_PRODUCT_LAMBDAS)}",
        ratios=np.asarray(ratios),
        ceiling=ctx.grids.ceiling_for("v-product", max(V_PRODUCT_LAMBDAS) + 2.0),
        series=SeriesTable(
            columns=("t", "r", "lam", "lower", "middle", "upper"),
            units=("time", "length", "1", "1", "1", "1"),
            rows=tuple(rows),
        ),
        passed=bool(rows) and misses == 0,
        notes=notes,
    )


def check_bias_control(ctx: CampaignContext) -> CheckResult:
    """Survival at (dt, epsilon) against (dt/2, epsilon/2); shifts stay inside the summed intervals."""
    model, domain = ctx.model, ctx.domain
    if isinstance(domain, WholeSpace):
        raise UnsupportedRegimeError("survival needs a proper domain", hypothesis="D != R^d")
    x = _center(ctx)
    cfg = ctx.sim
    finer = replace(cfg, dt=cfg.dt * REFINEMENT, epsilon=cfg.epsilon * REFINEMENT)
    times = ctx.grids.times
    coarse = sim.empirical_survival(model, domain, x, times, cfg)
    fine = sim.empirical_survival(model, domain, x, times, finer)
    misses = sum(abs(a.estimate - b.estimate) > a.half_width + b.half_width for a, b in zip(coarse, fine))
    return CheckResult(
        grid=f"t {_span(times)}, dt {cfg.dt:g} -> {finer.dt:g}, epsilon {cfg.epsilon:g} -> {finer.epsilon:g}",
        ratios=_ratios([b.estimate for b in fine], [a.estimate for a in coarse]),
        ceiling=ctx.grids.ceiling_for("bias-control"),
        series=SeriesTable(
            columns=("t", "coarse", "fine", "tolerance"),
            units=("time", "probability", "probability", "probability"),
            rows=tuple((t, a.estimate, b.estimate, a.half_width + b.half_width) for t, a, b in zip(times, coarse, fine)),
        ),
        passed=misses == 0,
        notes=[f"{misses} times shifted beyond the intervals"] if misses else [],
    )


CHECKS: dict[str, Callable[[CampaignContext], CheckResult]] = {
    "free-kernel-oracle": check_free_kernel_oracle,
    "free-kernel-agreement": check_free_kernel_agreement,
    "free-kernel-mass": check_free_kernel_mass,
    "free-chapman-kolmogorov": check_free_chapman_kolmogorov,
    "envelope-sandwich": check_envelope_sandwich,
    "survival-factorization": check_survival_factorization,
    "kernel-factorization": check_kernel_factorization,
    "ub-product": check_ub_product,
    "killed-chapman-kolmogorov": check_killed_chapman_kolmogorov,
    "domain-monotonicity": check_domain_monotonicity,
    "eigen-bracket": check_eigen_bracket,
    "overshoot": check_overshoot,
    "ikeda-watanabe": check_ikeda_watanabe,
    "v-product": check_v_product,
    "bias-control": check_bias_control,
}


# ----------------------------
# Driver
# ----------------------------
def run_check(ctx: CampaignContext, name: str) -> tuple[ReportRow, Optional[SeriesTable]]:
    started = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AccuracyWarning)
        warnings.simplefilter("always", SimulationWarning)
        try:
            result = CHECKS[name](ctx)
        except (UnsupportedRegimeError, RegimeError) as exc:
            logger.info("check %s skipped: %s", name, exc.message)
            row = ReportRow(
                check=name,
                grid="",
                min_ratio=0.0,
                max_ratio=0.0,
                ceiling=ctx.grids.ceiling_for(name),
                status="skipped",
                config_hash=ctx.config_hash,
                note=exc.message,
                runtime=time.perf_counter() - started,
            )
            return row, None

    notes = list(result.notes)
    accuracy = sum(issubclass(w.category, AccuracyWarning) for w in caught)
    if accuracy:
        notes.append(f"{accuracy} accuracy warnings")
    notes += [str(w.message) for w in caught if issubclass(w.category, SimulationWarning)]
    ratios = result.ratios
    low = float(ratios.min()) if ratios.size else 0.0
    high = float(ratios.max()) if ratios.size else 0.0
    if result.passed is not None:
        passed = result.passed
    else:
        passed = ratios.size > 0 and low > 0 and high / low <= result.ceiling
    row = ReportRow(
        check=name,
        grid=result.grid,
        min_ratio=low,
        max_ratio=high,
        ceiling=result.ceiling,
        status="pass" if passed else "fail",
        config_hash=ctx.config_hash,
        note="; ".join(notes),
        runtime=time.perf_counter() - started,
    )
    logger.info("check %s: %s, ratio [%.4g, %.4g] in %.2fs", name, row.status, low, high, row.runtime)
    return row, result.series


def run_campaign(loaded: LoadedCampaign, output_dir: Optional[Path] = None) -> ValidationReport:
    """
    Run the configured checks in registry order and write report.csv,
    summary.txt, renewal.csv and one plot-data file per check.
    """
    ctx = build_context(loaded)
    report = ValidationReport(metadata=_metadata(ctx))
    requested = set(loaded.config.checks)
    for name in CHECKS:
        if name not in requested:
            continue
        row, series = run_check(ctx, name)
        report.rows.append(row)
        if series is not None:
            report.series[name] = series

    directory = Path(output_dir or loaded.config.output_dir or settings.OUTPUT_DIR)
    directory.mkdir(parents=True, exist_ok=True)
    write_report_csv(report, directory / "report.csv", loaded.echo)
    write_summary(report, directory / "summary.txt")
    write_renewal_table(ctx.table, directory / "renewal.csv", loaded.echo)
    write_all_series(report, directory)
    logger.info("campaign %s: %s (%s)", ctx.config_hash, "PASS" if report.passed else "FAIL", directory)
    return report


# ----------------------------
# Helpers
# ----------------------------
def _span(values) -> str:
    values = list(values)
    if not values:
        return "[]"
    return f"[{min(values):g}, {max(values):g}]x{len(values)}"
