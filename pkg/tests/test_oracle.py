import math

import numpy as np
import pytest

from mobiusgreen import oracle, siegelgraph
from mobiusgreen.errors import CapExceededError, ConfigError


def test_chain_truncation():
    H = oracle.build_truncation({"model": "chain"}, 5).matrix.toarray()
    ref = -(np.eye(6, k=1) + np.eye(6, k=-1))
    assert np.array_equal(H, ref)
    H = oracle.build_truncation({"model": "chain", "potential": [0.5, -1]}, 3).matrix.toarray()
    assert np.diag(H).tolist() == [0.5, -1, 0, 0]


def test_binary_tree_truncation():
    H = oracle.build_truncation({"model": "kary_tree", "k": 2}, 3).matrix.toarray()
    assert H.shape == (15, 15)
    deg = np.abs(H).sum(axis=1)
    assert deg[0] == 2 and np.all(deg[1:7] == 3) and np.all(deg[7:] == 1)


def test_percolation_sample_full_deletion_is_a_path():
    H = oracle.build_truncation({"model": "percolation_sample", "q_del": 1.0}, 5, seed=3).matrix
    A = -H.toarray()
    assert A.shape == (6, 6)
    deg = A.sum(axis=1)
    assert sorted(deg.tolist()) == [1, 1, 2, 2, 2, 2]
    assert deg[0] == 1
    a = oracle.build_truncation({"model": "percolation_sample", "q_del": 0.3}, 8, seed=3).matrix
    b = oracle.build_truncation({"model": "percolation_sample", "q_del": 0.3}, 8, seed=3).matrix
    assert (a != b).nnz == 0
    # at least one forward edge per inner vertex means the cluster reaches depth 8
    g = siegelgraph.RootedGraph(-a)
    assert siegelgraph.bfs_distances(g).max() == 8


def test_descriptor_errors_and_caps():
    with pytest.raises(ConfigError):
        oracle.build_truncation({"model": "torus"}, 3)
    with pytest.raises(ConfigError):
        oracle.build_truncation({}, 3)
    with pytest.raises(ConfigError):
        oracle.build_truncation({"model": "percolation_sample", "q_del": 0.1}, 3)
    with pytest.raises(CapExceededError):
        oracle.build_truncation({"model": "kary_tree"}, 17)
    with pytest.raises(CapExceededError):
        oracle.build_truncation({"model": "box_Nd", "d": 2, "side": 65}, 3)
    with pytest.raises(CapExceededError):
        oracle.eig_spectrum(oracle.build_truncation({"model": "chain"}, 5000))


def test_chain_solve_matches_closed_form():
    lam = 0.5 + 0.05j
    zp = -lam / 2 + 1j * np.sqrt(1 - lam * lam / 4 + 0j)
    zp = zp if zp.imag > 0 else -lam - zp
    g = oracle.solve_green(oracle.build_truncation({"model": "chain"}, 4000), lam)
    assert abs(g - zp) < 1e-6


def test_binary_tree_depth_14_boundary_effect():
    # plain truncation converges slowly in the depth at Im lam = 0.05; it does
    # reach the fixed point once Im lam is large enough
    zl = lambda lam: (-lam + 1j * np.sqrt(8 - lam * lam + 0j)) / 4
    errs = [abs(oracle.solve_green(oracle.build_truncation({"model": "kary_tree"}, L), 0.3 + 0.05j) - zl(0.3 + 0.05j))
            for L in (6, 10, 14)]
    assert errs[0] > errs[1] > errs[2]
    lam = 0.3 + 1j
    assert abs(oracle.solve_green(oracle.build_truncation({"model": "kary_tree"}, 14), lam) - zl(lam)) < 1e-4


def test_conjugate_symmetry():
    H = oracle.build_truncation({"model": "box_Nd", "d": 2, "side": 6}, 5)
    a = oracle.solve_green(H, 2 + 0.1j)
    b = oracle.solve_green(H, 2 - 0.1j)
    assert a == pytest.approx(b.conjugate(), abs=1e-14)
    with pytest.raises(ValueError):
        oracle.solve_green(H, 2.0)


def test_green_positive_imaginary_part():
    rng = np.random.default_rng(0)
    H = oracle.build_truncation({"model": "chain", "potential": list(rng.uniform(-2, 2, 200))}, 199)
    for lam in rng.uniform(-4, 4, 20) + 1j * rng.exponential(size=20):
        for v in (0, 50, 199):
            assert oracle.solve_green(H, lam, v).imag > 0


def test_eig_examples():
    ev = oracle.eig_spectrum(oracle.build_truncation({"model": "chain"}, 3))
    assert np.allclose(ev, np.sort(-2 * np.cos(np.arange(1, 5) * math.pi / 5)), atol=1e-14)
    H = oracle.FiniteHamiltonian(oracle.build_truncation({"model": "chain", "potential": [0.7]}, 0).matrix)
    assert oracle.eig_spectrum(H).tolist() == [0.7]


@pytest.mark.parametrize("desc,depth", [({"model": "chain"}, 40), ({"model": "kary_tree", "k": 2}, 7),
                                        ({"model": "kary_tree", "k": 3}, 4)])
def test_bipartite_spectral_symmetry(desc, depth):
    ev = oracle.eig_spectrum(oracle.build_truncation(desc, depth))
    assert np.max(np.abs(ev + ev[::-1])) < 1e-10


def test_eig_green_matches_solve_green():
    rng = np.random.default_rng(1)
    g = siegelgraph.regular_loop_tree(5, 0.6)
    H = oracle.FiniteHamiltonian.from_graph(g, rng.uniform(-1, 1, g.n_vertices))
    for lam in (0.3 + 0.01j, -2 + 0.5j, 4 + 1e-3j):
        for v in (0, 10):
            assert abs(oracle.eig_green(H, lam, v) - oracle.solve_green(H, lam, v)) < 1e-8


def test_green_block_root_entry():
    H = oracle.build_truncation({"model": "box_Nd", "d": 2, "side": 5}, 4)
    B = oracle.green_block(H, 0.2 + 0.3j, [0, 1, 5])
    assert B.shape == (3, 3)
    assert B[0, 0] == pytest.approx(oracle.solve_green(H, 0.2 + 0.3j), abs=1e-14)
    assert np.allclose(B, B.T, atol=1e-14)
