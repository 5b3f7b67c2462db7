"""Brute-force reference values from explicit finite truncations.

Every model is cut off at depth ``L`` (Dirichlet: all edges beyond the last
sphere are dropped) and turned into a sparse real symmetric matrix
``H = -A + q``. Green functions come from a sparse LU solve, spectra from a
dense symmetric eigensolver.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _streams, siegelgraph
from .errors import CapExceededError, ConfigError, NumericalDegeneracyError

TREE_DEPTH_CAP = 16
BOX_SIDE_CAP = 64
DENSE_CAP = 4096

MODELS = ("chain", "kary_tree", "box_Nd", "regular_loop_tree", "meanfield_loop_tree", "percolation_sample")


@dataclass
class FiniteHamiltonian:
    """``H = -A + diag(q)`` on a finite truncation, rooted at `root`."""

    matrix: sp.csr_matrix
    root: int = 0
    name: str = ""

    @property
    def dim(self):
        return self.matrix.shape[0]

    @classmethod
    def from_graph(cls, g, pot=None):
        q = np.zeros(g.n_vertices) if pot is None else np.asarray(pot, dtype=float)
        if q.shape != (g.n_vertices,):
            raise ValueError("potential length does not match the graph")
        return cls(sp.csr_matrix(-g.adj + sp.diags(q)), g.root, g.name)


def _percolation_graph(q_del, depth, seed):
    # vertex v's children are 2v+1, 2v+2 in the full binary tree; cut deleted edges
    # and keep the root's cluster
    rng = _streams.generator(seed, 0)
    n_inner = 2 ** depth - 1
    u = rng.random(n_inner)
    keep_left = u >= q_del / 2
    keep_right = (u < q_del / 2) | (u >= q_del)
    parents = np.arange(n_inner)
    edges = np.concatenate([
        np.column_stack([parents[keep_left], 2 * parents[keep_left] + 1]),
        np.column_stack([parents[keep_right], 2 * parents[keep_right] + 2]),
    ])
    full = siegelgraph.RootedGraph.from_edges(edges, n_vertices=2 ** (depth + 1) - 1, name="percolation")
    reach = siegelgraph.bfs_distances(full) >= 0
    idx = np.flatnonzero(reach)
    adj = full.adj[idx][:, idx]
    return siegelgraph.RootedGraph(adj, 0, "percolation")


def restrict_ball(g, depth):
    """Subgraph on the vertices within graph distance `depth` of the root (root kept first)."""
    dist = siegelgraph.bfs_distances(g)
    idx = np.flatnonzero((dist >= 0) & (dist <= depth))
    idx = np.concatenate([[g.root], idx[idx != g.root]])
    return siegelgraph.RootedGraph(g.adj[idx][:, idx], 0, g.name)


def model_graph(desc, depth, seed=None):
    """The rooted graph (and potential, possibly None) of a model descriptor at depth `depth`."""
    if not isinstance(desc, dict) or "model" not in desc:
        raise ConfigError("model descriptor needs a 'model' key", key="model")
    kind = desc["model"]
    if kind not in MODELS:
        raise ConfigError(f"unknown model {kind!r}", key="model")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if kind == "chain":
        g = siegelgraph.half_line(depth)
        pot = desc.get("potential")
        if pot is not None:
            pot = np.asarray(pot, dtype=float)
            pot = np.concatenate([pot, np.zeros(max(0, depth + 1 - pot.size))])[: depth + 1]
        return g, pot
    if kind == "box_Nd":
        side = int(desc.get("side", depth + 1))
        if side > BOX_SIDE_CAP:
            raise CapExceededError(f"box side {side} exceeds {BOX_SIDE_CAP}")
        # the box only supplies the lattice; the cut is the l1 ball of radius depth
        return restrict_ball(siegelgraph.lattice_box(int(desc.get("d", 2)), side), depth), None
    if depth > TREE_DEPTH_CAP:
        raise CapExceededError(f"tree depth {depth} exceeds {TREE_DEPTH_CAP}")
    if kind == "kary_tree":
        return siegelgraph.kary_tree(int(desc.get("k", 2)), depth), None
    if kind == "regular_loop_tree":
        return siegelgraph.regular_loop_tree(depth, float(desc.get("gamma", 0.0))), None
    if kind == "meanfield_loop_tree":
        return siegelgraph.meanfield_loop_tree(depth, float(desc.get("gamma", 0.0)),
                                               bool(desc.get("diagonal", True))), None
    if seed is None:
        raise ConfigError("percolation_sample needs a seed", key="seed")
    return _percolation_graph(float(desc.get("q_del", 0.0)), depth, seed), None


def build_truncation(desc, depth, seed=None):
    """Explicit ``H`` for a model descriptor cut off at `depth`.

    Descriptors are dicts with ``"model"`` one of ``chain`` (optional
    ``potential`` list), ``kary_tree`` (``k``), ``box_Nd`` (``d``, ``side``;
    cut to the l1 ball of radius `depth`), ``regular_loop_tree`` /
    ``meanfield_loop_tree`` (``gamma``) and ``percolation_sample``
    (``q_del``; needs `seed`). Trees are capped at depth 16 and boxes at
    side 64.
    """
    g, pot = model_graph(desc, depth, seed)
    return FiniteHamiltonian.from_graph(g, pot)


def solve_green(H, lam, v=None):
    """``e_v^T (H - lam)^{-1} e_v`` by sparse LU; `v` defaults to the root.

    Any non-real `lam` is accepted; ``Im lam < 0`` gives the conjugate.
    """
    lam = complex(lam)
    v = H.root if v is None else v
    if lam.imag == 0:
        raise ValueError("solve_green requires Im(lambda) != 0")
    A = sp.csc_matrix(H.matrix, dtype=complex) - lam * sp.identity(H.dim, dtype=complex, format="csc")
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise NumericalDegeneracyError(f"sparse factorisation failed: {exc}") from exc
    e = np.zeros(H.dim, dtype=complex)
    e[v] = 1.0
    x = lu.solve(e)
    if not np.isfinite(x[v]):
        raise NumericalDegeneracyError("singular resolvent")
    return complex(x[v])


def green_block(H, lam, vertices):
    """Dense block ``P (H - lam)^{-1} P`` on the given vertices."""
    lam = complex(lam)
    A = sp.csc_matrix(H.matrix, dtype=complex) - lam * sp.identity(H.dim, dtype=complex, format="csc")
    lu = spla.splu(A)
    vertices = np.asarray(vertices)
    rhs = np.zeros((H.dim, vertices.size), dtype=complex)
    rhs[vertices, np.arange(vertices.size)] = 1.0
    return lu.solve(rhs)[vertices]


def eig_spectrum(H):
    """All eigenvalues of ``H`` in ascending order (dense, dimension <= 4096)."""
    if H.dim > DENSE_CAP:
        raise CapExceededError(f"dimension {H.dim} exceeds the dense cap {DENSE_CAP}")
    return scipy.linalg.eigvalsh(H.matrix.toarray())


def eig_green(H, lam, v=None):
    """``sum_k |psi_k(v)|**2 / (lambda_k - lam)`` from a dense eigendecomposition."""
    if H.dim > DENSE_CAP:
        raise CapExceededError(f"dimension {H.dim} exceeds the dense cap {DENSE_CAP}")
    v = H.root if v is None else v
    w, V = scipy.linalg.eigh(H.matrix.toarray())
    return complex(np.sum(np.abs(V[v]) ** 2 / (w - lam)))
