"""
Monte Carlo engine for the killed process.

Increments are compound-Poisson jumps longer than epsilon plus, in
`gaussian-match` mode, a Gaussian with the variance of the shorter jumps.
Paths run in blocks of BLOCK_SIZE; every step of every block draws from its own
Philox stream, so results depend only on (seed, config, model, domain).
"""
from __future__ import annotations

import logging
import math
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from ..config import settings
from ..errors import InvalidArgumentError, SimulationWarning
from ..models import Domain, EmpiricalStats, ExitRecord, PathBatch, ProcessModel, SimConfig
from ..utils.rng import step_generator
from . import geometry as geo
from . import process_models as pm
from .oscillatory import sphere_area

logger = logging.getLogger(__name__)

EXIT_NONE, EXIT_JUMP, EXIT_DIFFUSION, EXIT_BRIDGE = 0, 1, 2, 3
EXIT_KINDS = {EXIT_NONE: "none", EXIT_JUMP: "jump", EXIT_DIFFUSION: "diffusion", EXIT_BRIDGE: "bridge"}
TAIL_FRACTION = 1e-12
CDF_POINTS = 400
RATE_WARNING = 10.0
Z95 = 1.959963984540054

_samplers: dict[tuple, "IncrementSampler"] = {}
_sampler_lock = threading.Lock()


# ----------------------------
# Increments
# ----------------------------
@dataclass(frozen=True, eq=False)
class IncrementSampler:
    """Jump rate, magnitude quantiles and small-jump variance for one (model, epsilon)."""

    dimension: int
    epsilon: float
    rate: float
    sigma2: float  # per coordinate, per unit time
    log_s: np.ndarray
    cdf: np.ndarray
    tail_exponent: float

    def magnitudes(self, u: np.ndarray) -> np.ndarray:
        out = np.exp(np.interp(u, self.cdf, self.log_s))
        beyond = u > self.cdf[-1]
        if np.any(beyond):
            # power tail past the last grid point: P(|J| > s) ~ s^-a
            left = 1.0 - self.cdf[-1]
            out[beyond] = np.exp(self.log_s[-1]) * (left / np.maximum(1.0 - u[beyond], 1e-300)) ** (
                1.0 / self.tail_exponent
            )
        return out

    def sample(self, rng: np.random.Generator, n: int, dt: float) -> np.ndarray:
        """n independent increments over time dt, shape (n, d)."""
        d = self.dimension
        out = rng.standard_normal((n, d)) * math.sqrt(self.sigma2 * dt)
        counts = rng.poisson(self.rate * dt, n)
        total = int(counts.sum())
        if total:
            jumps = self.magnitudes(rng.random(total))[:, None] * unit_vectors(rng, total, d)
            np.add.at(out, np.repeat(np.arange(n), counts), jumps)
        return out


def unit_vectors(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    v = rng.standard_normal((n, d))
    norm = np.linalg.norm(v, axis=1, keepdims=True)
    return v / np.where(norm > 0, norm, 1.0)


def increment_sampler(model: ProcessModel, epsilon: float, small_jump_mode: str = "gaussian-match") -> IncrementSampler:
    """Inverse-CDF table of jump magnitudes, built once per (model, epsilon, mode)."""
    key = (model.fingerprint, float(epsilon), small_jump_mode)
    with _sampler_lock:
        cached = _samplers.get(key)
    if cached is not None:
        return cached

    d = model.dimension
    rate = pm.mass_between(model, epsilon)
    if not rate > 0:
        raise InvalidArgumentError(f"no jumps longer than epsilon={epsilon:g}", field="epsilon")
    s_max = model.support if math.isfinite(model.support) else _tail_cutoff(model, epsilon, rate)
    s_max = max(s_max, epsilon * (1.0 + 1e-9))
    s = np.geomspace(epsilon, s_max, CDF_POINTS)
    pieces = np.array([pm.mass_between(model, float(a), float(b)) for a, b in zip(s[:-1], s[1:])])
    cdf = np.concatenate(([0.0], np.cumsum(pieces))) / rate
    cdf = np.maximum.accumulate(np.minimum(cdf, 1.0))
    keep = np.concatenate(([True], np.diff(cdf) > 0))
    if math.isfinite(model.support):
        tail_exponent = math.inf
    else:
        far = pm.mass_between(model, float(s[-1]))
        nearer = pm.mass_between(model, float(s[-2]))
        tail_exponent = max(math.log(nearer / far) / math.log(s[-1] / s[-2]), 1e-3) if far > 0 else math.inf
    sigma2 = pm.small_jump_variance(model, epsilon) / d if small_jump_mode == "gaussian-match" else 0.0
    sampler = IncrementSampler(
        dimension=d,
        epsilon=float(epsilon),
        rate=rate,
        sigma2=sigma2,
        log_s=np.log(s[keep]),
        cdf=cdf[keep],
        tail_exponent=tail_exponent,
    )
    logger.info(
        "increment sampler %s: eps=%g rate=%.4g sigma2=%.4g s_max=%.4g", model.fingerprint, epsilon, rate, sigma2, s_max
    )
    with _sampler_lock:
        return _samplers.setdefault(key, sampler)


def _tail_cutoff(model: ProcessModel, epsilon: float, rate: float) -> float:
    s = epsilon
    while pm.mass_between(model, s) > TAIL_FRACTION * rate and s < 1e12:
        s *= 10.0
    return s


def sample_increment(model: ProcessModel, cfg: SimConfig, dt: float, rng: np.random.Generator) -> np.ndarray:
    """One displacement vector of X over time dt."""
    sampler = increment_sampler(model, cfg.epsilon, cfg.small_jump_mode)
    return sampler.sample(rng, 1, dt)[0]


# ----------------------------
# Path engine
# ----------------------------
def _steps(t_max: float, dt: float) -> tuple[int, float]:
    n = max(1, math.ceil(t_max / dt - 1e-9))
    return n, t_max / n


def _run_block(
        sampler: IncrementSampler,
        domain: Domain,
        x: np.ndarray,
        t_max: float,
        cfg: SimConfig,
        block: int,
        n: int,
        occupation_edges: Optional[np.ndarray] = None,
) -> PathBatch:
    d = sampler.dimension
    n_steps, h = _steps(t_max, cfg.dt)
    sigma2 = sampler.sigma2
    pos = np.tile(x, (n, 1))
    alive = np.ones(n, dtype=bool)
    tau = np.full(n, math.inf)
    kind = np.zeros(n, dtype=np.int8)
    exit_pos = np.full((n, d), np.nan)
    pre_pos = np.full((n, d), np.nan)
    occupation = None if occupation_edges is None else np.zeros(occupation_edges.size - 1)

    for step in range(n_steps):
        if not alive.any():
            break
        t0 = step * h
        if occupation is not None:
            hist, _ = np.histogram(pos[alive, 0], bins=occupation_edges)
            occupation += hist * h

        gen = step_generator(cfg.seed, block, step)
        gauss = gen.standard_normal((n, d)) * math.sqrt(sigma2 * h)
        counts = gen.poisson(sampler.rate * h, n)
        total = int(counts.sum())
        mags = sampler.magnitudes(gen.random(total))
        dirs = unit_vectors(gen, total, d)
        times = gen.random(total) * h
        bridge_u = gen.random(n + total)

        k_max = int(counts.max()) if n else 0
        jump_t = np.full((n, k_max + 1), h)
        jump_v = np.zeros((n, k_max + 1, d))
        if total:
            owner = np.repeat(np.arange(n), counts)
            start = np.concatenate(([0], np.cumsum(counts)[:-1]))
            rank = np.arange(total) - np.repeat(start, counts)
            order = np.lexsort((times, owner))
            sorted_times = times[order]
            jump_t[owner, rank] = sorted_times
            jump_v[owner, rank] = (mags[order])[:, None] * dirs[order]
        bridge_base = np.concatenate(([0], np.cumsum(counts + 1)[:-1]))

        prev_t = np.zeros(n)
        for k in range(k_max + 1):
            active = alive & (k <= counts)
            if not active.any():
                break
            idx = np.flatnonzero(active)
            seg = jump_t[idx, k] - prev_t[idx]
            a = pos[idx]
            b = a + gauss[idx] * (seg / h)[:, None]
            delta_a = geo.delta(domain, a)
            delta_b = geo.delta(domain, b)

            # diffusion crossing at a monitoring point
            crossed = delta_b <= 0
            if crossed.any():
                ci = idx[crossed]
                frac, inside, outside = _refine_exit(domain, a[crossed], gauss[ci] * (seg[crossed] / h)[:, None],
                                                     cfg.exit_refinement)
                alive[ci] = False
                kind[ci] = EXIT_DIFFUSION
                tau[ci] = t0 + prev_t[ci] + frac * seg[crossed]
                exit_pos[ci] = outside
                pre_pos[ci] = inside

            # Brownian bridge crossing between monitoring points
            if sigma2 > 0:
                ok = ~crossed
                with np.errstate(invalid="ignore", over="ignore"):
                    exponent = -2.0 * delta_a[ok] * delta_b[ok] / (sigma2 * np.maximum(seg[ok], 1e-300))
                hit = bridge_u[bridge_base[idx[ok]] + k] < np.exp(np.nan_to_num(exponent, nan=-np.inf))
                if hit.any():
                    bi = idx[ok][hit]
                    alive[bi] = False
                    kind[bi] = EXIT_BRIDGE
                    tau[bi] = t0 + prev_t[bi] + 0.5 * seg[ok][hit]
                    exit_pos[bi] = b[ok][hit]
                    pre_pos[bi] = a[ok][hit]

            moved = alive[idx]
            mi = idx[moved]
            pos[mi] = b[moved]
            prev_t[mi] = jump_t[mi, k]

            # the jump closing segment k
            jumping = mi[k < counts[mi]]
            if jumping.size:
                before = pos[jumping]
                after = before + jump_v[jumping, k]
                gone = geo.delta(domain, after) <= 0
                gi = jumping[gone]
                alive[gi] = False
                kind[gi] = EXIT_JUMP
                tau[gi] = t0 + jump_t[gi, k]
                exit_pos[gi] = after[gone]
                pre_pos[gi] = before[gone]
                stay = jumping[~gone]
                pos[stay] = after[~gone]

    return PathBatch(
        tau=tau,
        kind=kind,
        exit_position=exit_pos,
        pre_exit_position=pre_pos,
        final_position=np.where(alive[:, None], pos, np.nan),
        occupation=occupation,
    )


def _refine_exit(domain: Domain, a: np.ndarray, move: np.ndarray, depth: int):
    """Bisect the segment a -> a + move for the first outside point."""
    lo = np.zeros(a.shape[0])
    hi = np.ones(a.shape[0])
    for _ in range(depth):
        mid = 0.5 * (lo + hi)
        out = geo.delta(domain, a + mid[:, None] * move) <= 0
        hi = np.where(out, mid, hi)
        lo = np.where(out, lo, mid)
    return hi, a + lo[:, None] * move, a + hi[:, None] * move


def run_paths(
        model: ProcessModel,
        domain: Domain,
        x,
        t_max: float,
        cfg: SimConfig,
        *,
        occupation_edges: Optional[Sequence[float]] = None,
        workers: Optional[int] = None,
) -> PathBatch:
    """cfg.n_paths paths from x up to t_max, merged in block order."""
    start = geo.as_points(domain, x)[0]
    if not geo.contains(domain, start)[0]:
        raise InvalidArgumentError("starting point must lie in the domain", field="x")
    if not t_max > 0:
        raise InvalidArgumentError("t_max must be positive", field="t_max")
    sampler = increment_sampler(model, cfg.epsilon, cfg.small_jump_mode)
    _, h = _steps(t_max, cfg.dt)
    if sampler.rate * h > RATE_WARNING:
        warnings.warn(
            SimulationWarning(f"jump rate x dt = {sampler.rate * h:.3g} > {RATE_WARNING:g}; shrink dt or raise epsilon")
        )
    edges = None if occupation_edges is None else np.asarray(occupation_edges, dtype=float)
    size = settings.BLOCK_SIZE
    blocks = [(b, min(size, cfg.n_paths - b * size)) for b in range(math.ceil(cfg.n_paths / size))]
    logger.info("simulating %d paths in %d blocks to t=%g on %s", cfg.n_paths, len(blocks), t_max, domain.kind)

    def work(item):
        block, n = item
        return _run_block(sampler, domain, start, t_max, cfg, block, n, edges)

    with ThreadPoolExecutor(max_workers=workers or settings.WORKERS) as pool:
        parts = list(pool.map(work, blocks))
    occupation = None
    if edges is not None:
        occupation = np.sum([p.occupation for p in parts], axis=0)
    return PathBatch(
        tau=np.concatenate([p.tau for p in parts]),
        kind=np.concatenate([p.kind for p in parts]),
        exit_position=np.concatenate([p.exit_position for p in parts]),
        pre_exit_position=np.concatenate([p.pre_exit_position for p in parts]),
        final_position=np.concatenate([p.final_position for p in parts]),
        occupation=occupation,
    )


def simulate_until_exit(model: ProcessModel, domain: Domain, x, t_max: float, cfg: SimConfig) -> ExitRecord:
    """First path of the cfg.seed stream run to exit or t_max."""
    single = SimConfig(cfg.epsilon, cfg.dt, 1, cfg.seed, cfg.small_jump_mode, cfg.exit_refinement)
    batch = run_paths(model, domain, x, t_max, single, workers=1)
    exited = bool(batch.kind[0] != EXIT_NONE)
    return ExitRecord(
        exited=exited,
        tau=float(batch.tau[0]),
        exit_position=batch.exit_position[0],
        pre_exit_position=batch.pre_exit_position[0],
        kind=EXIT_KINDS[int(batch.kind[0])],
    )


# ----------------------------
# Estimators
# ----------------------------
def wilson(successes: int, n: int, seed: int, estimator: str) -> EmpiricalStats:
    ci = stats.binomtest(int(successes), int(n)).proportion_ci(confidence_level=0.95, method="wilson")
    return EmpiricalStats(
        estimate=successes / n,
        half_width=(ci.high - ci.low) / 2.0,
        n_paths=n,
        seed=seed,
        estimator=estimator,
        ci_low=float(ci.low),
        ci_high=float(ci.high),
    )


def poisson_bin(count: int, n: int, volume: float, seed: int) -> EmpiricalStats:
    scale = n * volume
    half = 3.0 / scale if count == 0 else Z95 * math.sqrt(count) / scale
    estimate = count / scale
    return EmpiricalStats(
        estimate=estimate,
        half_width=half,
        n_paths=n,
        seed=seed,
        estimator="histogram",
        ci_low=max(0.0, estimate - half),
        ci_high=estimate + half,
    )


def empirical_survival(
        model: ProcessModel, domain: Domain, x, times: Sequence[float], cfg: SimConfig
) -> list[EmpiricalStats]:
    """P^x(tau_D > t) at every t from one pass of cfg.n_paths paths."""
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])) or (times and times[0] < 0):
        raise InvalidArgumentError("times must be nonnegative and increasing", field="times")
    if not times:
        return []
    if times[-1] == 0:
        return [wilson(cfg.n_paths, cfg.n_paths, cfg.seed, "survival") for _ in times]
    batch = run_paths(model, domain, x, times[-1], cfg)
    return [wilson(int(np.count_nonzero(batch.tau > t)), batch.n_paths, cfg.seed, "survival") for t in times]


def bin_volumes(edges: np.ndarray, d: int, radial: bool) -> np.ndarray:
    if not radial:
        return np.diff(edges)
    return sphere_area(d) / d * np.diff(edges**d)


def empirical_kernel(
        model: ProcessModel,
        domain: Domain,
        t: float,
        x,
        bins: Sequence[float],
        cfg: SimConfig,
) -> tuple[np.ndarray, list[EmpiricalStats]]:
    """
    Histogram of p_D(t, x, .) from surviving positions. d = 1 bins are
    coordinate intervals; d >= 2 bins are shells |y - x| in [e_k, e_k+1).
    """
    edges = np.asarray(bins, dtype=float)
    batch = run_paths(model, domain, x, t, cfg)
    return edges, histogram_stats(batch, domain, x, edges, cfg.seed)


def histogram_stats(batch: PathBatch, domain: Domain, x, edges: np.ndarray, seed: int) -> list[EmpiricalStats]:
    d = domain.dimension
    survivors = batch.final_position[~np.isnan(batch.final_position[:, 0])]
    if d == 1:
        values = survivors[:, 0]
    else:
        values = np.linalg.norm(survivors - geo.as_points(domain, x)[0], axis=1)
    counts, _ = np.histogram(values, bins=edges)
    volumes = bin_volumes(edges, d, radial=d > 1)
    return [poisson_bin(int(c), batch.n_paths, float(v), seed) for c, v in zip(counts, volumes)]


def empirical_exit_time(
        model: ProcessModel, domain: Domain, x, cfg: SimConfig, t_max: float
) -> EmpiricalStats:
    """Mean of tau ^ t_max with a normal 95% interval; censored paths count t_max."""
    return exit_time_stats(run_paths(model, domain, x, t_max, cfg), t_max, cfg.seed)


def exit_time_stats(batch: PathBatch, t_max: float, seed: int) -> EmpiricalStats:
    capped = np.minimum(batch.tau, t_max)
    censored = int(np.count_nonzero(np.isinf(batch.tau)))
    if censored:
        logger.warning("%d of %d paths still alive at t_max=%g", censored, batch.n_paths, t_max)
    mean = float(capped.mean())
    half = Z95 * float(capped.std(ddof=1)) / math.sqrt(batch.n_paths) if batch.n_paths > 1 else math.inf
    return EmpiricalStats(
        estimate=mean,
        half_width=half,
        n_paths=batch.n_paths,
        seed=seed,
        estimator="exit-time",
        ci_low=mean - half,
        ci_high=mean + half,
    )


def empirical_overshoot(
        model: ProcessModel,
        domain: Domain,
        x,
        r: float,
        cfg: SimConfig,
        t_max: float,
) -> EmpiricalStats:
    """P^x(|X_tau - x| >= r) among all paths; paths alive at t_max count as no overshoot."""
    batch = run_paths(model, domain, x, t_max, cfg)
    return overshoot_stats(batch, r, cfg.seed, center=geo.as_points(domain, x)[0])


def overshoot_stats(batch: PathBatch, r: float, seed: int, center=None) -> EmpiricalStats:
    exited = batch.kind != EXIT_NONE
    origin = np.zeros(batch.exit_position.shape[1]) if center is None else np.asarray(center, dtype=float)
    far = np.zeros(batch.n_paths, dtype=bool)
    far[exited] = np.linalg.norm(batch.exit_position[exited] - origin, axis=1) >= r
    return wilson(int(far.sum()), batch.n_paths, seed, "overshoot")


def occupation(
        model: ProcessModel,
        domain: Domain,
        x,
        edges: Sequence[float],
        cfg: SimConfig,
        t_max: float,
) -> tuple[np.ndarray, PathBatch]:
    """Expected time spent per bin before exit (d = 1), per path."""
    if domain.dimension != 1:
        raise InvalidArgumentError("occupation measure is one-dimensional", field="domain")
    batch = run_paths(model, domain, x, t_max, cfg, occupation_edges=edges)
    return batch.occupation / batch.n_paths, batch


def ikeda_watanabe_prediction(
        model: ProcessModel,
        occupation_density: np.ndarray,
        occupation_edges: Sequence[float],
        exit_edges: Sequence[float],
        epsilon: float,
) -> np.ndarray:
    """
    Probability of a jump exit into each exterior bin [a, b) to the right:
    sum over occupation bins of time x nu([a - y, b - y)), jumps below epsilon excluded.
    """
    centers = 0.5 * (np.asarray(occupation_edges)[1:] + np.asarray(occupation_edges)[:-1])
    exit_edges = np.asarray(exit_edges, dtype=float)
    out = np.zeros(exit_edges.size - 1)
    for k, (a, b) in enumerate(zip(exit_edges[:-1], exit_edges[1:])):
        near = np.maximum(a - centers, epsilon)
        far = np.maximum(b - centers, epsilon)
        one_sided = np.array([
            (pm.mass_between(model, float(lo)) - pm.mass_between(model, float(hi))) / 2.0 for lo, hi in zip(near, far)
        ])
        out[k] = float(np.dot(occupation_density, one_sided))
    return out
