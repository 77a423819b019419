import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatlab.errors import InvalidArgumentError
from heatlab.models import (
    Ball,
    ExteriorBall,
    GeometricGrid,
    Halfspace,
    HalfspaceLike,
    Interval,
    UnionTwoBalls,
    WholeSpace,
)
from heatlab.processors import geometry as geo
from heatlab.processors import renewal

DISJOINT = UnionTwoBalls(2, (0.0, 0.0), (3.0, 0.0), 1.0)
OVERLAPPING = UnionTwoBalls(2, (0.0, 0.0), (1.0, 0.0), 1.0)
BUMP = HalfspaceLike(2, a=1.0, b=0.0, width=1.0)


# ----------------------------
# Distances
# ----------------------------
@pytest.mark.parametrize(
    "domain,x,expected",
    [
        (Ball(2, (0.0, 0.0), 1.0), (0.5, 0.0), 0.5),
        (Ball(2, (0.0, 0.0), 1.0), (2.0, 0.0), 0.0),
        (ExteriorBall(2, (0.0, 0.0), 1.0), (3.0, 0.0), 2.0),
        (Halfspace(2, 1.0), (5.0, 3.0), 2.0),
        (Halfspace(1), -1.0, 0.0),
        (Interval(0.0, 2.0), 0.5, 0.5),
        (Interval(0.0, 2.0), 1.5, 0.5),
        (UnionTwoBalls(1, (0.0,), (3.0,), 1.0), 0.5, 0.5),
        (DISJOINT, (3.2, 0.0), 0.8),
        (OVERLAPPING, (0.5, 0.0), math.sqrt(3.0) / 2.0),
        (BUMP, (5.0, 2.0), 2.0),
        (BUMP, (0.0, 3.0), 2.0),
        (BUMP, (0.0, 0.5), 0.0),
        (HalfspaceLike(1, a=1.0, b=0.0), 3.0, 2.0),
    ],
)
def test_distance_to_complement(domain, x, expected):
    assert geo.dist_to_complement(domain, x) == pytest.approx(expected, abs=1e-9)


def test_whole_space_has_no_boundary():
    assert geo.dist_to_complement(WholeSpace(2), (1.0, 2.0)) == math.inf


def test_contains_is_vectorized():
    inside = geo.contains(Interval(0.0, 1.0), np.array([-0.5, 0.5, 1.5]))
    assert inside.tolist() == [False, True, False]


def test_wrong_point_dimension():
    with pytest.raises(InvalidArgumentError):
        geo.dist_to_complement(Ball(3, (0.0, 0.0, 0.0), 1.0), (0.1, 0.2))


@given(
    st.tuples(st.floats(-2, 2), st.floats(-2, 2)),
    st.tuples(st.floats(-2, 2), st.floats(-2, 2)),
)
def test_distance_is_one_lipschitz(x, y):
    for domain in (OVERLAPPING, DISJOINT):
        gap = abs(geo.dist_to_complement(domain, x) - geo.dist_to_complement(domain, y))
        assert gap <= math.dist(x, y) + 1e-7


# ----------------------------
# Scales
# ----------------------------
def test_c11_scales():
    assert geo.c11_scales(Ball(2, (0.0, 0.0), 2.0)).scale == 2.0
    assert geo.c11_scales(Interval(0.0, 3.0)).scale == 1.5
    assert geo.c11_scales(Halfspace(2)).scale == math.inf
    assert (geo.c11_scales(DISJOINT).r_in, geo.c11_scales(DISJOINT).r_out) == (1.0, 0.5)
    assert geo.c11_scales(OVERLAPPING).scale == 0.0
    assert geo.c11_scales(BUMP).scale == pytest.approx(0.25)
    assert geo.c11_scales(ExteriorBall(2, (0.0, 0.0), 1.0)).exterior == (1.0, 1.0)


def test_two_ball_outer_scale_is_half_the_gap():
    r_out = geo.c11_scales(DISJOINT).r_out
    assert r_out == pytest.approx(0.5)
    # the outside ball tangent at (1, 0) clears the other ball only up to radius gap/2
    for radius, hits in ((r_out, False), (1.0, True)):
        angles = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
        rim = np.stack([1.0 + radius + 0.999 * radius * np.cos(angles), 0.999 * radius * np.sin(angles)], axis=1)
        assert bool(np.any(geo.contains(DISJOINT, rim))) is hits


def test_sizes():
    assert geo.inradius(Interval(0.0, 3.0)) == 1.5
    assert geo.diameter(Interval(0.0, 3.0)) == 3.0
    assert geo.diameter(DISJOINT) == pytest.approx(5.0)
    assert geo.inradius(Halfspace(2)) == math.inf


def test_tangent_balls_of_a_ball():
    (c_in, r_in), (c_out, r_out) = geo.inner_outer_balls(Ball(2, (0.0, 0.0), 1.0), (1.0, 0.0))
    np.testing.assert_allclose(c_in, [0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(c_out, [2.0, 0.0], atol=1e-12)
    assert r_in == r_out == 1.0


def test_boundary_points_lie_on_the_boundary():
    for domain in (Ball(2, (1.0, 1.0), 2.0), Ball(3, (0.0, 0.0, 0.0), 1.0), DISJOINT, BUMP):
        pts = geo.boundary_points(domain, 32)
        assert pts.shape[1] == domain.dimension
        np.testing.assert_allclose(geo.delta(domain, pts), 0.0, atol=1e-9)


def test_whole_space_has_no_boundary_points():
    with pytest.raises(InvalidArgumentError):
        geo.boundary_points(WholeSpace(1))


# ----------------------------
# Reference points
# ----------------------------
@pytest.mark.parametrize(
    "domain",
    [
        Ball(3, (0.0, 1.0, 0.0), 2.0),
        ExteriorBall(2, (0.0, 0.0), 1.0),
        Halfspace(2, -1.0),
        HalfspaceLike(1, a=1.0, b=0.0),
        BUMP,
        Interval(-1.0, 1.0),
        DISJOINT,
    ],
    ids=lambda d: d.kind,
)
@pytest.mark.parametrize("distance", [0.1, 0.5])
def test_point_at_distance(domain, distance):
    x = geo.point_at_distance(domain, distance)
    assert geo.dist_to_complement(domain, x) == pytest.approx(distance, abs=1e-9)


def test_point_at_distance_outside_range():
    with pytest.raises(InvalidArgumentError):
        geo.point_at_distance(Ball(1, (0.0,), 1.0), 1.5)
    with pytest.raises(InvalidArgumentError):
        geo.point_at_distance(Interval(0.0, 1.0), 0.75)
    with pytest.raises(InvalidArgumentError):
        geo.point_at_distance(WholeSpace(2), 1.0)


# ----------------------------
# I(r), J(r)
# ----------------------------
def test_script_ij_for_inverse_square(inverse_square):
    table = renewal.build_renewal_table(inverse_square, "h-proxy", GeometricGrid(1e-3, 1e3, 4))
    ij = geo.script_IJ(inverse_square, table, 10.0, resolution=50)
    assert ij.I == pytest.approx(0.25, rel=1e-6)
    assert ij.argmin_I == pytest.approx(5.0)
    assert ij.J == pytest.approx(0.5, rel=1e-6)
