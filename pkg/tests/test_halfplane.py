import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobiusgreen.errors import BoundaryUnderflowError
from mobiusgreen.halfplane import (HPoint, cd_weight, check_lambda, contraction_factor, contraction_ratio,
                                   mobius_step, poincare_dist, two_step_disk_radius)

finite = st.floats(-50, 50, allow_nan=False)
heights = st.floats(1e-3, 50, allow_nan=False)
points = st.builds(complex, finite, heights)


def test_hpoint_validation():
    z = HPoint(1, 2)
    assert (z.re, z.im) == (1.0, 2.0)
    with pytest.raises(BoundaryUnderflowError):
        HPoint(1, 0)
    with pytest.raises(BoundaryUnderflowError):
        HPoint(0, 1e-301)
    with pytest.raises(ValueError):
        HPoint(float("nan"), 1)
    with pytest.raises(ValueError):
        check_lambda(1 - 1j)


def test_poincare_examples():
    assert poincare_dist(1j, 1j) == 0
    assert poincare_dist(1j, 2j) == pytest.approx(math.log(2), abs=1e-15)
    assert poincare_dist(1j, 1 + 1j) == pytest.approx(math.acosh(1.5), abs=1e-15)
    assert poincare_dist(1j, 1 + 1j) == pytest.approx(0.962424, abs=1e-6)


def test_poincare_matches_arccosh_and_is_accurate_near_zero():
    rng = np.random.default_rng(1)
    z1 = rng.normal(size=1000) + 1j * rng.exponential(size=1000)
    z2 = rng.normal(size=1000) + 1j * rng.exponential(size=1000)
    ref = np.arccosh(1 + np.abs(z1 - z2) ** 2 / (2 * z1.imag * z2.imag))
    assert np.allclose(poincare_dist(z1, z2), ref, rtol=1e-12, atol=1e-12)
    # arccosh(1 + tiny) loses everything; the log1p form keeps the leading term
    assert poincare_dist(1j, 1j + 1e-12) == pytest.approx(1e-12, rel=1e-6)


@given(points, points, points)
@settings(max_examples=300, deadline=None)
def test_poincare_is_a_metric(a, b, c):
    assert poincare_dist(a, b) == poincare_dist(b, a)
    assert poincare_dist(a, c) <= poincare_dist(a, b) + poincare_dist(b, c) + 1e-12


def test_mobius_examples():
    assert complex(mobius_step(1j, 0, 0)) == pytest.approx(1j)
    assert complex(mobius_step(1j, 0, 1j)) == pytest.approx(0.5j)
    zp = complex(-0.5, math.sqrt(0.75))
    assert complex(mobius_step(zp, 0, 1)) == pytest.approx(zp, abs=1e-15)
    assert isinstance(mobius_step(1j, 0, 0), HPoint)


@given(points, st.floats(-5, 5), st.builds(complex, st.floats(-5, 5), st.floats(1e-3, 5)))
@settings(max_examples=300, deadline=None)
def test_mobius_image_in_disk(z, q, lam):
    w = mobius_step(z, q, lam)
    assert w.im > 0
    assert abs(w) < 1 / lam.imag


def test_contraction_factor_examples():
    assert contraction_factor(2, 0.5) == pytest.approx(0.8)
    assert contraction_factor(1, 1) == 0.5
    assert contraction_factor(1e-3, 1) == pytest.approx(0.000999, rel=1e-3)
    with pytest.raises(ValueError):
        contraction_factor(0, 1)


def test_contraction_ratio_examples():
    assert contraction_ratio(0, 1j, 1j, 2j) <= 2 / 3
    assert contraction_ratio(0, 0, 1j, 1 + 1j) == pytest.approx(1, abs=1e-12)
    assert contraction_ratio(5, 0, 1j, 2j) == pytest.approx(1, abs=1e-12)
    with pytest.raises(ZeroDivisionError):
        contraction_ratio(0, 1j, 1j, 1j)


def test_contraction_vectorised_random():
    rng = np.random.default_rng(3)
    n = 20_000
    z1 = rng.normal(scale=3, size=n) + 1j * rng.exponential(size=n)
    z2 = rng.normal(scale=3, size=n) + 1j * rng.exponential(size=n)
    q = rng.uniform(-2, 2, n)
    lam = rng.uniform(-3, 3, n) + 1j * rng.choice([0.0, 0.01, 1.0], n)
    r = contraction_ratio(q, lam, z1, z2)
    assert np.max(r) <= 1 + 1e-10


def test_cd_weight_examples():
    assert cd_weight(0.3 + 2j, 0.3 + 2j) == 0
    assert cd_weight(2j, 1j) == pytest.approx(0.5)
    assert cd_weight(1j, 1j / math.sqrt(2)) == pytest.approx((1 - 1 / math.sqrt(2)) ** 2, abs=1e-15)
    assert cd_weight(1j, 1j / math.sqrt(2)) == pytest.approx(0.085786, abs=1e-6)


def test_two_step_disk():
    c, r = two_step_disk_radius(0, 1j, 10_000)
    assert math.isfinite(r) and abs(c) < 1
    c, r = two_step_disk_radius(1, 0.5 + 0.1j, 10_000)
    assert math.isfinite(r) and r > 0
    c, r = two_step_disk_radius(0, 10j, 10_000)
    assert r < 0.1
    with pytest.raises(ValueError):
        two_step_disk_radius(0, 1.0, 100)


def test_two_step_disk_covers_fresh_samples():
    lam = 0.5 + 0.3j
    c, r = two_step_disk_radius(1, lam, 40_000)
    rng = np.random.default_rng(5)
    z = rng.normal(scale=5, size=2000) + 1j * np.exp(rng.uniform(-8, 8, 2000))
    q1, q2 = rng.uniform(-1, 1, (2, 2000))
    w = -1 / (-1 / (z + lam - q1) + lam - q2)
    # sampled enclosure: allow a little slack for points between grid nodes
    assert np.max(poincare_dist(c, w)) <= r * 1.05
