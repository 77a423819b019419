import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatlab.errors import InvalidArgumentError, ModelInvalidError, RenewalInversionError, TableRangeError
from heatlab.models import GeometricGrid, RenewalTable
from heatlab.processors import process_models as pm
from heatlab.processors import renewal

SMALL_GRID = GeometricGrid(1e-2, 1e2, 4)


# ----------------------------
# kappa
# ----------------------------
def test_kappa_of_cauchy(cauchy):
    assert renewal.kappa(cauchy, 4.0) == pytest.approx(2.0, rel=1e-8)


@pytest.mark.parametrize(
    "model",
    [pm.stable(1, 1.5), pm.sum_of_stables(1, 0.5, 1.5), pm.profile_nu(1, 1.0, 0.5)],
    ids=["stable", "sum", "profile"],
)
def test_kappa_increasing(model):
    assert renewal.kappa(model, 2.0) >= renewal.kappa(model, 1.0)


def test_kappa_at_one_is_the_defining_integral():
    from scipy import integrate

    model = pm.sum_of_stables(1, 0.5, 1.5)
    direct, _ = integrate.quad(lambda z: math.log(z**0.5 + z**1.5) / (1.0 + z * z), 0.0, np.inf, limit=400)
    assert renewal.kappa(model, 1.0) == pytest.approx(math.exp(direct / math.pi), rel=1e-7)


def test_kappa_complex_agrees_on_real_axis(stable15):
    assert renewal.kappa_complex(stable15, 3.0 + 0j).real == pytest.approx(renewal.kappa(stable15, 3.0), rel=1e-6)


def test_kappa_rejects_nonpositive(cauchy):
    with pytest.raises(InvalidArgumentError):
        renewal.kappa(cauchy, 0.0)


# ----------------------------
# Tables
# ----------------------------
@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_exact_backend_reproduces_stable_renewal_function(alpha):
    table = renewal.build_renewal_table(pm.stable(1, alpha), "exact-laplace", SMALL_GRID)
    expected = table.radii ** (alpha / 2.0) / math.gamma(1.0 + alpha / 2.0)
    np.testing.assert_allclose(table.values, expected, rtol=1e-3)


def test_power_normalization_gives_power_law():
    model = pm.stable(1, 1.0)
    table = renewal.build_renewal_table(
        model, "exact-laplace", SMALL_GRID, normalization=renewal.normalization_for(model, power=True)
    )
    assert table.V(4.0) == pytest.approx(2.0, rel=1e-3)


def test_proxy_backend_oracle(inverse_square):
    table = renewal.build_renewal_table(inverse_square, "h-proxy", SMALL_GRID)
    assert table.V(1.0) == pytest.approx(0.5, rel=1e-6)
    assert table.V(0.0) == 0.0
    assert table.backend == "h-proxy"
    assert table.fingerprint == inverse_square.fingerprint


def test_unknown_backend_rejected(cauchy):
    with pytest.raises(InvalidArgumentError):
        renewal.build_renewal_table(cauchy, "spectral", SMALL_GRID)


def test_inverse_and_derivative(exact_table):
    assert exact_table.Vinverse(math.sqrt(4.0)) == pytest.approx(4.0, rel=1e-9)
    s = np.geomspace(1e-2, 1e2, 9)
    assert np.allclose([exact_table.V(exact_table.Vinverse(x)) for x in s], s, rtol=1e-9)
    assert np.all(exact_table.Vprime(np.geomspace(1e-4, 1e4, 50)) >= 0)
    assert renewal.renewal_eval(exact_table, "Vprime", 1.0) == pytest.approx(0.5, rel=1e-6)


def test_queries_beyond_a_decade_are_refused(exact_table):
    assert exact_table.V(5e4) == pytest.approx(math.sqrt(5e4), rel=1e-6)
    with pytest.raises(TableRangeError):
        exact_table.V(1e6)
    with pytest.raises(InvalidArgumentError):
        renewal.renewal_eval(exact_table, "W", 1.0)


def test_check_table_rejects_decreasing_values(cauchy):
    radii = SMALL_GRID.points()
    broken = RenewalTable(radii, radii[::-1].copy(), np.ones_like(radii), "h-proxy", cauchy.fingerprint)
    with pytest.raises(RenewalInversionError) as info:
        renewal.check_table(broken)
    assert info.value.radii


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
@settings(max_examples=100, deadline=None)
def test_subadditive(x, y):
    from tests.conftest import power_table

    table = power_table(pm.stable(1, 1.0), 1.0)
    assert table.V(x + y) <= table.V(x) + table.V(y) + 1e-12


# ----------------------------
# Comparison constants
# ----------------------------
def test_condition_h_for_concave_v(exact_table):
    estimate = renewal.estimate_H(exact_table, 1.0, resolution=60)
    assert estimate.value == pytest.approx(1.0, abs=1e-6)


def test_condition_h_is_finite_for_sum_of_stables():
    model = pm.sum_of_stables(1, 0.5, 1.5)
    table = renewal.build_renewal_table(model, "h-proxy", GeometricGrid(1e-4, 1e3, 8))
    estimate = renewal.estimate_H(table, 10.0, resolution=60)
    assert 1.0 <= estimate.value < 10.0
    x, y, z = estimate.argmax
    assert x <= y <= z <= 5.0 * x * (1 + 1e-9)


def test_h_v2_product_is_one_for_proxy(inverse_square):
    table = renewal.build_renewal_table(inverse_square, "h-proxy", SMALL_GRID)
    low, high = renewal.h_v2_bounds(inverse_square, table)
    assert low == pytest.approx(1.0, rel=1e-9)
    assert high == pytest.approx(1.0, rel=1e-9)


def test_scaling_transfer_constant_of_power_law(exact_table):
    assert renewal.scaling_transfer_constant(exact_table, 1.0) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.slow
def test_backends_agree_within_a_dimension_constant():
    band, low, high = renewal.backend_band(pm.stable(1, 1.0))
    assert band <= 10.0
    assert high / low == pytest.approx(1.0, rel=1e-2)


@pytest.mark.slow
@pytest.mark.parametrize(
    "model",
    [pm.stable(1, 1.0), pm.truncated_stable(1, 1.0), pm.sum_of_stables(1, 1.0, 1.5), pm.subordinate_bm(1, 1.0),
     pm.profile_nu(1, 1.0, 1.5)],
    ids=["stable", "truncated", "sum", "subordinate", "profile"],
)
def test_backend_band_on_every_preset(model):
    band, low, high = renewal.backend_band(model)
    assert 0.0 < low <= high
    assert band == pytest.approx(max(high, 1.0 / low))
    assert band <= 10.0


@pytest.mark.slow
def test_backend_band_needs_a_levy_density():
    with pytest.raises(ModelInvalidError):
        renewal.backend_band(renewal.complete_bernstein_model(1, 1.0), GeometricGrid(1e-1, 1e1, 2))


@pytest.mark.slow
def test_complete_bernstein_preset():
    model = pm.build_model("complete-bernstein", 1, alpha=1.0)
    assert not model.has_nu
    u = np.geomspace(1e-2, 1e2, 9)
    values = pm.psi_fast(model, u)
    assert np.all(np.diff(values) > 0)
    # V0(x) ~ x^(alpha/2) for large x, so psi(u) = V0(u^2) ~ u^alpha at high frequency
    assert math.log(values[-1] / values[-2]) / math.log(u[-1] / u[-2]) == pytest.approx(1.0, abs=0.1)
