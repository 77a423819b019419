import math

import numpy as np
import pytest

from heatlab.models import GeometricGrid, RenewalTable
from heatlab.processors import process_models as pm


def power_table(model, alpha: float, lo: float = 1e-4, hi: float = 1e4) -> RenewalTable:
    """Renewal table of the stable law in power normalization, V(x) = x^(alpha/2)."""
    grid = GeometricGrid(lo, hi, 16)
    radii = grid.points()
    return RenewalTable(
        radii=radii,
        values=radii ** (alpha / 2.0),
        derivative=alpha / 2.0 * radii ** (alpha / 2.0 - 1.0),
        backend="exact-laplace",
        fingerprint=model.fingerprint,
        normalization=math.gamma(1.0 + alpha / 2.0),
        grid=grid,
    )


@pytest.fixture(scope="session")
def cauchy():
    return pm.stable(1, 1.0)


@pytest.fixture(scope="session")
def stable15():
    return pm.stable(1, 1.5)


@pytest.fixture(scope="session")
def inverse_square():
    # nu(s) = s^-2 in d = 1: h(r) = 4/r, L(r) = 2/r
    return pm.custom(1, "inverse-square", nu=lambda s: np.power(s, -2.0))


@pytest.fixture(scope="session")
def exact_table(cauchy):
    return power_table(cauchy, 1.0)


@pytest.fixture(scope="session")
def exact_table15(stable15):
    return power_table(stable15, 1.5)


@pytest.fixture
def campaign_file(tmp_path):
    def write(text: str, name: str = "campaign.toml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
