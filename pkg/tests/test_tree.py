import math

import numpy as np
import pytest

from mobiusgreen import tree
from mobiusgreen.errors import (ConfigError, IndeterminateError, InadmissibleModelError, OutOfBandError)
from mobiusgreen.halfplane import cd_weight, mobius_step, poincare_dist
from mobiusgreen.tree import Distribution, JointDistribution, TreeModel

BERN = Distribution("bernoulli_pm1")
S8 = 2 * math.sqrt(2)


def zk(k, lam):
    # independent closed form: H-root of k z**2 + lam z + 1
    r = np.sqrt(lam * lam - 4 * k + 0j)
    a, b = (-lam + r) / (2 * k), (-lam - r) / (2 * k)
    return a if a.imag > b.imag else b


def test_distribution_json():
    assert Distribution.from_json({"type": "bernoulli_pm1"}).second_moment == 1.0
    u = Distribution.from_json({"type": "uniform", "lo": -0.5, "hi": 0.5})
    assert u.bound == 0.5 and u.second_moment == pytest.approx(1 / 12)
    t = Distribution.from_json({"type": "two_point", "p": 0.25, "values": [-3, 1]})
    assert t.mean == 0
    for bad in ({"type": "gauss"}, {"type": "uniform", "lo": 0, "hi": 1}, {"type": "bernoulli_pm1", "x": 1},
                {"type": "two_point", "values": [1]}, {}):
        with pytest.raises(ConfigError):
            Distribution.from_json(bad)
    x = u.sample(np.random.default_rng(0), 1000)
    assert x.min() >= -0.5 and x.max() <= 0.5


def test_joint_distribution():
    ind = JointDistribution.independent()
    assert ind.moments() == (1.0, 1.0, 0.0)
    full = JointDistribution.fully_correlated()
    assert full.moments() == (1.0, 1.0, 1.0)
    j = JointDistribution.from_json({"atoms": [[1, -1], [-1, 1]], "probs": [0.5, 0.5]})
    assert j.moments()[2] == -1.0
    with pytest.raises(ConfigError):
        JointDistribution(((1, 1),), (0.5,))
    with pytest.raises(ConfigError):
        TreeModel.two_periodic(JointDistribution(((2, 2), (-2, -2)), (0.5, 0.5)), 0.1)
    with pytest.raises(ConfigError):
        TreeModel.two_periodic(JointDistribution(((1, 1),), (1.0,)), 0.1)
    q1, q2 = full.sample(np.random.default_rng(1), 100)
    assert np.array_equal(q1, q2)


def test_psi_examples():
    lam = 0.7
    z = tree.tree_fixed_point(2, lam)
    assert complex(tree.psi_step([z, z], 0, lam)) == pytest.approx(complex(z), abs=1e-15)
    assert complex(tree.psi_step([1j, 1j], 0, 0)) == pytest.approx(0.5j)
    for w, q, l in [(1j, 0.3, 0.1), (-2 + 0.1j, -1, 0.5 + 0.2j)]:
        assert complex(tree.psi_step([w], q, l)) == pytest.approx(complex(mobius_step(w, q, l)))


def test_psi_maps_into_upper_half_plane():
    rng = np.random.default_rng(2)
    n = 100_000
    zs = rng.normal(scale=3, size=(3, n)) + 1j * np.exp(rng.uniform(-8, 3, (3, n)))
    q = rng.uniform(-3, 3, n)
    lam = rng.uniform(-4, 4, n) + 1j * rng.choice([0.0, 1e-3, 1.0], n)
    w = tree.psi_step(zs, q, lam)
    assert np.all(w.imag > 0)


def test_tree_fixed_point_examples():
    assert complex(tree.tree_fixed_point(2, 0)) == pytest.approx(1j / math.sqrt(2))
    assert complex(tree.tree_fixed_point(3, 0)) == pytest.approx(1j / math.sqrt(3))
    with pytest.raises(OutOfBandError):
        tree.tree_fixed_point(2, S8)
    lams = np.array([0.3 + 0.01j, -2.5 + 0.2j, 5 + 1e-3j])
    assert np.allclose(tree.tree_fixed_point(3, lams), [zk(3, x) for x in lams], atol=1e-14)


@pytest.mark.parametrize("k", [2, 3])
def test_population_collapses_without_disorder(k):
    lam = 0.5 + 1e-3j
    pool = tree.population_green(TreeModel(k=k), lam, pool_size=10_000, generations=200)
    assert np.max(np.abs(pool.samples - zk(k, lam))) < 1e-6
    # from a generic start the pool still collapses
    lam = 0.5 + 0.1j
    pool = tree.population_green(TreeModel(k=k), lam, pool_size=100, generations=400, init=1j)
    assert np.max(np.abs(pool.samples - zk(k, lam))) < 1e-6
    assert tree.moment_Mp(pool, 1.5) < 1e-10


def test_collapse_is_geometric():
    lam = 0.5 + 0.1j
    gens = np.arange(5, 61, 5)
    d = [np.max(poincare_dist(tree.population_green(TreeModel(), lam, 50, int(g), init=3 + 1j).samples,
                              zk(2, lam))) for g in gens]
    rates = np.array(d[1:]) / np.array(d[:-1])
    assert np.all(rates < 1)
    assert rates.max() / rates.min() < 1.5


def test_population_is_thread_independent():
    model = TreeModel.iid(BERN, 0.3)
    a = tree.population_green(model, 0.5 + 0.01j, 20_000, 30, seed=5, threads=1)
    b = tree.population_green(model, 0.5 + 0.01j, 20_000, 30, seed=5, threads=3)
    assert np.array_equal(a.samples, b.samples)
    c = tree.population_green(model, 0.5 + 0.01j, 20_000, 30, seed=6, threads=1)
    assert not np.array_equal(a.samples, c.samples)


def test_population_argument_checks():
    with pytest.raises(ValueError):
        tree.population_green(TreeModel(), 0.5, 100, 10)
    with pytest.raises(ValueError):
        tree.population_green(TreeModel(), 0.5 + 1j, 5, 10)
    with pytest.raises(ValueError):
        tree.population_green(TreeModel(), 0.5 + 1j, 100, 0)


def test_iid_pool_stays_off_the_axis():
    model = TreeModel.iid(BERN, 0.1)
    mins = []
    for eps in (1e-2, 1e-3, 1e-4):
        pool = tree.population_green(model, 0.5 + 1j * eps, 5000, 200, seed=2)
        mins.append(np.quantile(pool.samples.imag, 0.01))
    assert min(mins) > 0.1


def test_moment_examples():
    zr = 1j / math.sqrt(2)
    assert tree.moment_Mp(np.full(10, zr), 2, zr) == 0
    assert tree.moment_Mp(np.full(10, 1j), 2, zr) == pytest.approx(0.085786 ** 2, abs=1e-6)
    assert tree.moment_Mp(np.full(10, 1j), 2, zr) == pytest.approx((1 - 1 / math.sqrt(2)) ** 4, abs=1e-15)
    with pytest.raises(ValueError):
        tree.moment_Mp(np.full(10, 1j), 1.0, zr)
    with pytest.raises(ValueError):
        tree.moment_Mp(np.full(10, 1j), 2)


def test_mu2p_examples():
    assert tree.mu2p(1j, 1j, 0, 0, 1.3) == pytest.approx(1.0, abs=1e-12)
    assert tree.mu2p(1j, 1j, 0, 0, 2) == pytest.approx(1.0, abs=1e-12)
    assert tree.mu2p(1j, 2j, 0, 0, 2) < 1
    z = tree.tree_fixed_point(2, 0.4)
    with pytest.raises(IndeterminateError):
        tree.mu2p(z, z, 0, 0.4, 1.5)


def test_mu2p_at_most_one():
    rng = np.random.default_rng(9)
    n = 100_000
    z1 = rng.normal(scale=2, size=n) + 1j * np.exp(rng.uniform(-7, 3, n))
    z2 = rng.normal(scale=2, size=n) + 1j * np.exp(rng.uniform(-7, 3, n))
    p = rng.uniform(1, 2, n)
    p[0] = 2.0
    lam = rng.uniform(-S8, S8, n) * 0.999
    vals = np.array([tree.mu2p(z1[i::50], z2[i::50], 0.0, lam[i], p[i::50]) for i in range(50)])
    assert np.concatenate(vals).max() <= 1 + 1e-10


def test_mu2p_boundary_examples():
    s = 1 / math.sqrt(2)
    assert tree.mu2p_boundary((s, s), (s, s), 0.3, 0.5, 2, 0.0) == pytest.approx(1.0)
    assert tree.mu2p_boundary((1, 0), (s, s), 0.0, 0.5, 2, 0.0) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        tree.mu2p_boundary((1, 1), (s, s), 0.0, 0.5, 2, 0.0)
    with pytest.raises(ValueError):
        tree.mu2p_boundary((1, 0), (s, s), 0.0, 0.5, 2, -1.0)
    # continuity as r -> 0 at fixed q
    om = np.array([0.6, 0.8j])
    vals = [tree.mu2p_boundary(om, (0.3, math.sqrt(0.91)), 0.7, 0.5, 1.5, r) for r in (1e-2, 1e-4, 1e-6, 0.0)]
    assert abs(vals[-2] - vals[-1]) < 1e-5 and abs(vals[-3] - vals[-1]) < abs(vals[0] - vals[-1]) + 1e-12


def test_blowup_coordinates_reproduce_mu2p():
    rng = np.random.default_rng(10)
    for _ in range(200):
        z1 = rng.normal() + 1j * np.exp(rng.uniform(-6, 2))
        z2 = rng.normal() + 1j * np.exp(rng.uniform(-6, 2))
        q, lam, p = rng.uniform(-1, 1), rng.uniform(-2.5, 2.5), rng.uniform(1, 2)
        om, v, r, Y = tree.blowup_coordinates(z1, z2, lam)
        assert abs(np.linalg.norm(om) - 1) < 1e-12
        assert tree.mu2p_boundary(om, v, q, lam, p, r, Y) == pytest.approx(tree.mu2p(z1, z2, q, lam, p), rel=1e-9)


def test_mu3p_examples():
    res = tree.mu3p((1j, 1j, 1j), (0, 0), 0, 2)
    assert abs(res.value - res.reconstruction) < 1e-9
    z = tree.tree_fixed_point(2, 0.2)
    with pytest.raises(IndeterminateError):
        tree.mu3p((z, z, z), (0, 0), 0.2, 1.5)


def test_mu3p_identity_random():
    rng = np.random.default_rng(11)
    n = 10_000
    zs = list(rng.normal(scale=2, size=(3, n)) + 1j * np.exp(rng.uniform(-6, 2, (3, n))))
    qs = tuple(rng.uniform(-1, 1, (2, n)))
    res = tree.mu3p(zs, qs, 0.5, 1.5)
    assert np.max(np.abs(res.value - res.reconstruction)) < 1e-9
    # a point at the fixed point contributes zero weight but the identity still holds
    zs[0][:10] = complex(tree.tree_fixed_point(2, 0.5))
    res = tree.mu3p(zs, (0.0, 0.0), 0.5, 1.5)
    assert np.max(np.abs(res.value - res.reconstruction)) < 1e-9


def test_nj_weights_sum_to_one():
    rng = np.random.default_rng(12)
    zs = rng.normal(size=(3, 1000)) + 1j * rng.exponential(size=(3, 1000))
    w = tree.nj_weights(list(zs), 0.5, 1.5)
    assert np.max(np.abs(w.sum(axis=0) - 1)) < 1e-12


def test_mu3p_boundary_scan_margin():
    scan = tree.mu3p_boundary_scan(0.5, 1.5, samples=5000)
    assert set(scan) == {1e-4, 1e-5, 1e-6}
    for vmax, margin in scan.values():
        assert margin > 0 and vmax + margin == pytest.approx(1.0)


def test_cubic_examples():
    assert tree.oscillating_ac_test(0, 0) == "ac_interior"
    assert tree.oscillating_ac_test(3, 0) == "not_ac"
    assert tree.oscillating_ac_test(0, 2) == "not_ac"
    roots = sorted(tree.oscillating_roots(0, 0), key=lambda z: z.imag)
    assert np.allclose(roots, [-1j * math.sqrt(2), 0, 1j * math.sqrt(2)], atol=1e-12)
    assert np.allclose(sorted(r.real for r in tree.oscillating_roots(3, 0)), [-3, -2, -1], atol=1e-12)
    assert np.allclose(sorted(r.real for r in tree.oscillating_roots(0, 2)), [-math.sqrt(2), 0, math.sqrt(2)],
                       atol=1e-12)
    assert tree.oscillating_ac_test(S8, 0) == "boundary"


def test_cubic_classifier_matches_free_tree_band():
    for lam in np.linspace(-4, 4, 1000):
        if abs(abs(lam) - S8) < 1e-6:
            continue
        want = "ac_interior" if abs(lam) < S8 else "not_ac"
        assert tree.oscillating_ac_test(lam, 0.0) == want


def test_cardano_matches_numpy_roots():
    rng = np.random.default_rng(13)
    for _ in range(1000):
        lam, delta = rng.uniform(-4, 4), rng.uniform(0, 3)
        coeffs = [1.0, 2 * lam, 2 + lam * lam - delta * delta, 2 * lam]
        mine = np.array(tree.cardano_roots(*coeffs))
        ref = np.roots(coeffs)
        assert np.max(np.min(np.abs(mine[:, None] - ref[None, :]), axis=1)) < 1e-6
        n_real = int(np.sum(np.abs(ref.imag) < 1e-7))
        cls = tree.oscillating_ac_test(lam, delta)
        if cls != "boundary" and abs(tree.cubic_discriminant(lam, delta)) > 1e-3:
            assert cls == ("ac_interior" if n_real == 1 else "not_ac")


def test_oscillating_green_solves_cubic():
    lam, delta = 0.5 + 1e-2j, 0.5
    x, y = tree.oscillating_green(lam, delta, depth=20_000)
    s = complex(x) + complex(y)
    assert abs(s ** 3 + 2 * lam * s ** 2 + (2 + lam ** 2 - delta ** 2) * s + 2 * lam) < 1e-6
    x0, y0 = tree.oscillating_green(lam, 0.0, depth=20_000)
    assert complex(x0) == pytest.approx(zk(2, lam), abs=1e-6)
    # small modulations keep the values in H
    x1, y1 = tree.oscillating_green(lam, delta, delta1=lambda n: 0.01 / n, delta2=lambda n: -0.01 / n)
    assert x1.im > 0 and y1.im > 0


def test_correlation_delta():
    assert tree.correlation_delta(1, 1, 0) == (0.0, True)
    assert tree.correlation_delta(0.3, 0.3, 0.3) == (1.0, False)
    d, ok = tree.correlation_delta(1, 1, 0.4)
    assert d == pytest.approx(0.4) and ok
    with pytest.raises(ZeroDivisionError):
        tree.correlation_delta(0, 0, 0)


def test_two_periodic_collapses_at_zero_disorder():
    lam = 0.3 + 0.05j
    model = TreeModel.two_periodic(JointDistribution.independent(), 0.0, BERN)
    pool = tree.two_periodic_population(model, lam, 1000, 2000, init=1j)
    assert np.max(np.abs(pool.values() - zk(2, lam))) < 1e-6
    root = tree.two_periodic_root(pool, model)
    assert np.max(np.abs(root - zk(2, lam))) < 1e-6


def test_two_periodic_admissibility_and_determinism():
    full = TreeModel.two_periodic(JointDistribution.fully_correlated(), 0.5)
    with pytest.raises(InadmissibleModelError):
        tree.two_periodic_population(full, 0.3 + 0.01j, 100, 5)
    a = tree.two_periodic_population(full, 0.3 + 0.01j, 20_000, 10, seed=3, allow_inadmissible=True)
    b = tree.two_periodic_population(full, 0.3 + 0.01j, 20_000, 10, seed=3, threads=4, allow_inadmissible=True)
    assert np.array_equal(a.values(), b.values())
    # fully correlated pairs keep x = y: the sampler reduces to the 1D-like chain
    assert np.array_equal(a.samples, a.partner)


def test_two_periodic_matches_explicit_sphere_recursion():
    # a pair (q1, q2) per sphere, applied to the even/odd vertices of the full tree
    rng = np.random.default_rng(14)
    depth, lam, a = 8, 0.3 + 0.2j, 0.5
    pairs = rng.choice([-1.0, 1.0], size=(depth + 1, 2))
    vals = np.full(2 ** (depth + 1), 1j)
    for n in range(depth, 0, -1):
        q = np.tile(pairs[n], 2 ** (n - 1))
        vals = -1.0 / (vals[0::2] + vals[1::2] + lam - a * q)
    x = y = 1j
    for n in range(depth, 0, -1):
        s = x + y + lam
        x, y = -1.0 / (s - a * pairs[n][0]), -1.0 / (s - a * pairs[n][1])
    assert np.allclose(vals, [x, y], atol=1e-14)


def test_two_periodic_contrast():
    # full correlation makes M_p grow as eps shrinks; independence does not
    ms = {}
    for name, joint, allow in (("ind", JointDistribution.independent(), False),
                               ("full", JointDistribution.fully_correlated(), True)):
        model = TreeModel.two_periodic(joint, 0.5)
        ms[name] = [tree.moment_Mp(tree.two_periodic_population(model, 0.3 + 1j * eps, 2000, 3000, seed=1,
                                                                allow_inadmissible=allow), 1.5)
                    for eps in (1e-1, 1e-3)]
    assert ms["full"][1] > 10 * ms["full"][0]
    assert ms["ind"][1] < 3 * ms["ind"][0]


def test_cd_reference_is_tree_fixed_point():
    pool = tree.population_green(TreeModel(), 0.5 + 0.1j, 20, 3, init=1j)
    ref = np.mean(cd_weight(pool.samples, zk(2, 0.5 + 0.1j)) ** 1.5)
    assert tree.moment_Mp(pool, 1.5) == pytest.approx(ref)
