import math

import numpy as np
import pytest

from heatlab.config import settings
from heatlab.errors import InvalidArgumentError, SimulationWarning
from heatlab.models import Ball, Interval, PathBatch, SimConfig, WholeSpace
from heatlab.processors import geometry as geo
from heatlab.processors import process_models as pm
from heatlab.processors import simulator as sim
from heatlab.utils.rng import step_generator

SEGMENT = Interval(-1.0, 1.0)


@pytest.fixture
def cfg():
    return SimConfig(epsilon=0.05, dt=0.01, n_paths=300, seed=7)


# ----------------------------
# Streams
# ----------------------------
def test_step_streams_are_reproducible():
    a = step_generator(3, 0, 5).random(4)
    np.testing.assert_array_equal(a, step_generator(3, 0, 5).random(4))
    assert not np.array_equal(a, step_generator(3, 0, 6).random(4))
    assert not np.array_equal(a, step_generator(3, 1, 5).random(4))
    with pytest.raises(ValueError):
        step_generator(-1, 0, 0)


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(epsilon=0.0, dt=0.01, n_paths=10)
    with pytest.raises(ValueError):
        SimConfig(epsilon=0.1, dt=0.01, n_paths=10, small_jump_mode="exact")


# ----------------------------
# Increments
# ----------------------------
def test_increment_second_moment():
    model = pm.truncated_stable(1, 1.0)
    sampler = sim.increment_sampler(model, 0.05)
    x2 = sampler.sample(np.random.default_rng(11), 20_000, 1.0)[:, 0] ** 2
    target = pm.second_moment(model, 0.0, 1.0)
    assert target == pytest.approx(2.0 / math.pi, rel=1e-6)
    tolerance = 5.0 * x2.std(ddof=1) / math.sqrt(x2.size) + 0.005 * target
    assert abs(x2.mean() - target) <= tolerance


def test_drop_mode_has_no_gaussian_part():
    model = pm.truncated_stable(1, 1.0)
    kept = sim.increment_sampler(model, 0.05, "gaussian-match")
    dropped = sim.increment_sampler(model, 0.05, "drop")
    assert dropped.sigma2 == 0.0
    assert kept.sigma2 == pytest.approx(pm.small_jump_variance(model, 0.05))
    assert dropped.rate == kept.rate


def test_increments_are_isotropic():
    sampler = sim.increment_sampler(pm.truncated_stable(2, 1.0), 0.05)
    steps = sampler.sample(np.random.default_rng(5), 20_000, 0.5)
    angle = np.arctan2(steps[:, 1], steps[:, 0])
    bound = 5.0 * math.sqrt(0.5 / angle.size)
    for moment in (np.cos(angle), np.sin(angle), np.cos(2 * angle), np.sin(2 * angle)):
        assert abs(moment.mean()) <= bound


def test_unit_vectors_have_unit_length():
    v = sim.unit_vectors(np.random.default_rng(0), 100, 3)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0)


def test_single_increment_shape(cauchy, cfg):
    assert sim.sample_increment(cauchy, cfg, 0.1, np.random.default_rng(0)).shape == (1,)


# ----------------------------
# Paths
# ----------------------------
def test_runs_are_deterministic(cauchy, cfg):
    a = sim.run_paths(cauchy, SEGMENT, 0.0, 0.5, cfg)
    b = sim.run_paths(cauchy, SEGMENT, 0.0, 0.5, cfg)
    np.testing.assert_array_equal(a.tau, b.tau)
    np.testing.assert_array_equal(a.kind, b.kind)
    other = sim.run_paths(cauchy, SEGMENT, 0.0, 0.5, SimConfig(0.05, 0.01, 300, seed=8))
    assert not np.array_equal(a.tau, other.tau)


def test_results_do_not_depend_on_worker_count(cauchy, cfg, monkeypatch):
    monkeypatch.setattr(settings, "BLOCK_SIZE", 64)
    one = sim.run_paths(cauchy, SEGMENT, 0.0, 0.5, cfg, workers=1)
    many = sim.run_paths(cauchy, SEGMENT, 0.0, 0.5, cfg, workers=3)
    np.testing.assert_array_equal(one.tau, many.tau)
    np.testing.assert_array_equal(one.exit_position, many.exit_position)
    assert one.n_paths == 300


def test_exit_bookkeeping(cauchy, cfg):
    batch = sim.run_paths(cauchy, SEGMENT, 0.5, 1.0, cfg)
    exited = batch.kind != sim.EXIT_NONE
    assert exited.any()
    assert np.all(batch.tau[exited] <= 1.0 + 1e-12)
    assert np.all(np.isinf(batch.tau[~exited]))
    assert np.all(np.isnan(batch.final_position[exited]))
    outside = np.isin(batch.kind, (sim.EXIT_JUMP, sim.EXIT_DIFFUSION))
    assert np.all(geo.delta(SEGMENT, batch.exit_position[outside]) == 0.0)
    assert np.all(geo.delta(SEGMENT, batch.pre_exit_position[exited]) > 0.0)
    assert np.all(geo.delta(SEGMENT, batch.final_position[~exited]) > 0.0)


def test_drop_mode_only_exits_by_jumps(cauchy):
    cfg = SimConfig(0.05, 0.01, 200, seed=1, small_jump_mode="drop")
    batch = sim.run_paths(cauchy, SEGMENT, 0.0, 1.0, cfg)
    assert set(np.unique(batch.kind)) <= {sim.EXIT_NONE, sim.EXIT_JUMP}


def test_start_outside_is_rejected(cauchy, cfg):
    with pytest.raises(InvalidArgumentError):
        sim.run_paths(cauchy, SEGMENT, 2.0, 1.0, cfg)


def test_coarse_steps_warn(cauchy):
    with pytest.warns(SimulationWarning):
        sim.run_paths(cauchy, SEGMENT, 0.0, 0.1, SimConfig(0.001, 0.1, 10))


def test_simulate_until_exit(cauchy, cfg):
    record = sim.simulate_until_exit(cauchy, SEGMENT, 0.0, 50.0, cfg)
    assert record.exited
    assert record.kind in ("jump", "diffusion", "bridge")
    assert 0.0 < record.tau <= 50.0


# ----------------------------
# Estimators
# ----------------------------
def test_whole_space_never_kills(cauchy, cfg):
    stats = sim.empirical_survival(cauchy, WholeSpace(1), 0.0, [0.5, 1.0], cfg)
    assert [s.estimate for s in stats] == [1.0, 1.0]


def test_short_time_survival_in_a_ball():
    model = pm.stable(2, 1.0)
    stats = sim.empirical_survival(model, Ball(2, (0.0, 0.0), 1.0), (0.0, 0.0), [0.001], SimConfig(0.05, 0.001, 2000))
    assert stats[0].estimate >= 0.99
    assert stats[0].ci_low <= stats[0].estimate <= stats[0].ci_high


def test_survival_is_nonincreasing(cauchy, cfg):
    stats = sim.empirical_survival(cauchy, SEGMENT, 0.0, [0.1, 0.3, 0.6, 1.0], cfg)
    estimates = [s.estimate for s in stats]
    assert estimates == sorted(estimates, reverse=True)
    assert all(s.n_paths == 300 and s.seed == 7 for s in stats)


def test_survival_times_validated(cauchy, cfg):
    with pytest.raises(InvalidArgumentError):
        sim.empirical_survival(cauchy, SEGMENT, 0.0, [1.0, 0.5], cfg)
    assert sim.empirical_survival(cauchy, SEGMENT, 0.0, [0.0], cfg)[0].estimate == 1.0


def test_histogram_mass_equals_survival(cauchy, cfg):
    edges, stats = sim.empirical_kernel(cauchy, SEGMENT, 0.5, 0.0, np.linspace(-1.0, 1.0, 11), cfg)
    mass = sum(s.estimate * w for s, w in zip(stats, np.diff(edges)))
    survival = sim.empirical_survival(cauchy, SEGMENT, 0.0, [0.5], cfg)[0].estimate
    assert mass == pytest.approx(survival, abs=1e-12)


def test_radial_bin_volumes():
    np.testing.assert_allclose(sim.bin_volumes(np.array([0.0, 1.0, 2.0]), 2, radial=True), [math.pi, 3 * math.pi])
    np.testing.assert_allclose(sim.bin_volumes(np.array([0.0, 1.0, 2.0]), 3, radial=True), [4 * math.pi / 3, 28 * math.pi / 3])
    np.testing.assert_allclose(sim.bin_volumes(np.array([0.0, 0.5]), 1, radial=False), [0.5])


def test_exit_time_statistics():
    batch = PathBatch(
        tau=np.array([1.0, 2.0, math.inf]),
        kind=np.array([1, 2, 0], dtype=np.int8),
        exit_position=np.zeros((3, 1)),
        pre_exit_position=np.zeros((3, 1)),
        final_position=np.zeros((3, 1)),
    )
    stats = sim.exit_time_stats(batch, 3.0, seed=0)
    assert stats.estimate == pytest.approx(2.0)
    assert stats.half_width == pytest.approx(sim.Z95 / math.sqrt(3.0))


def test_overshoot_is_nonincreasing_in_radius(cauchy, cfg):
    batch = sim.run_paths(cauchy, SEGMENT, 0.0, 5.0, cfg)
    values = [sim.overshoot_stats(batch, r, cfg.seed, center=[0.0]).estimate for r in (1.0, 1.5, 3.0, 10.0)]
    assert values == sorted(values, reverse=True)
    assert values[0] <= np.mean(batch.kind != sim.EXIT_NONE)


def test_interval_estimates():
    assert sim.wilson(0, 10, 0, "survival").ci_low == 0.0
    empty = sim.poisson_bin(0, 100, 0.5, 0)
    assert empty.estimate == 0.0
    assert empty.half_width == pytest.approx(3.0 / 50.0)


# ----------------------------
# Occupation and jump exits
# ----------------------------
def test_jump_exit_prediction_for_inverse_square(inverse_square):
    predicted = sim.ikeda_watanabe_prediction(inverse_square, np.array([1.0]), [0.0, 1.0], [2.0, 3.0], 0.01)
    assert predicted[0] == pytest.approx(1.0 / 1.5 - 1.0 / 2.5, rel=1e-6)


def test_occupation_is_one_dimensional(cfg):
    with pytest.raises(InvalidArgumentError):
        sim.occupation(pm.stable(2, 1.0), Ball(2, (0.0, 0.0), 1.0), (0.0, 0.0), [0.0, 1.0], cfg, 1.0)


def test_occupation_time_matches_mean_exit_time(cauchy, cfg):
    edges = np.linspace(-1.0, 1.0, 21)
    density, batch = sim.occupation(cauchy, SEGMENT, 0.0, edges, cfg, 20.0)
    # each surviving path contributes dt per step to exactly one bin
    assert density.sum() == pytest.approx(
        sim.exit_time_stats(batch, 20.0, cfg.seed).estimate, abs=cfg.dt + 1e-9
    )
