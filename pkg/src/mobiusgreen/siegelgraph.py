"""Green functions on rooted graphs through the Siegel half-space.

The graph is cut into spheres ``S_n`` around the root. With ``D_n`` the
adjacency inside ``S_n`` and ``E_n : l2(S_n) -> l2(S_{n+1})`` the forward
edges, the truncated Green blocks obey the matrix Mobius recursion

    Z_n = -(E_n^T Z_{n+1} E_n + D_n - q_n + lam)^{-1},

a Schur complement step. ``Z`` is complex *symmetric* (not Hermitian) with
positive definite imaginary part.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import KernelConditionError, NumericalDegeneracyError
from .halfplane import HPoint, check_lambda

@dataclass
class RootedGraph:
    """Undirected weighted graph with a distinguished root.

    ``adj`` is a symmetric scipy sparse matrix of edge weights (1 for plain
    edges).
    """

    adj: sp.csr_matrix
    root: int = 0
    name: str = "graph"

    def __post_init__(self):
        a = sp.csr_matrix(self.adj, dtype=float)
        if a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if abs(a - a.T).max() if a.nnz else 0:
            raise ValueError("adjacency must be symmetric")
        a.sum_duplicates()
        a.eliminate_zeros()
        self.adj = a

    @property
    def n_vertices(self):
        return self.adj.shape[0]

    def max_degree(self):
        return int(np.diff(self.adj.indptr).max(initial=0))

    @classmethod
    def from_edges(cls, edges, n_vertices=None, weights=None, root=0, name="graph"):
        """Build from ``(u, v)`` pairs; each pair is an undirected edge.

        Repeated pairs accumulate weight.
        """
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if edges.size and edges.min() < 0:
            raise ValueError("vertex ids must be nonnegative")
        if n_vertices is None:
            n_vertices = int(edges.max()) + 1 if edges.size else 1
        w = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=float)
        loops = edges[:, 0] == edges[:, 1]
        if np.any(loops):
            raise ValueError("self-loops are not edges of a graph")
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        adj = sp.coo_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n_vertices, n_vertices))
        return cls(adj.tocsr(), root, name)

    @classmethod
    def from_edgelist_file(cls, path, root=0):
        """Read ``u v`` pairs, one per line; ``#`` starts a comment."""
        edges = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
                edges.append((int(parts[0]), int(parts[1])))
        return cls.from_edges(edges, root=root, name=str(path))


# generators -----------------------------------------------------------------

def half_line(depth):
    """Path 0 - 1 - ... - depth."""
    return RootedGraph.from_edges([(i, i + 1) for i in range(depth)], n_vertices=depth + 1, name="half_line")


def kary_tree(k, depth):
    """Rooted tree where every vertex has `k` forward neighbours.

    Vertices are numbered breadth first; sphere ``n`` is the contiguous range
    ``(k**n - 1)/(k - 1) .. (k**(n+1) - 1)/(k - 1) - 1``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return half_line(depth)
    n_inner = (k ** depth - 1) // (k - 1)
    parents = np.repeat(np.arange(n_inner), k)
    children = np.arange(1, n_inner * k + 1)
    return RootedGraph.from_edges(np.column_stack([parents, children]), n_vertices=n_inner * k + 1,
                                  name=f"tree{k}")


def lattice_box(d, side):
    """``{0, ..., side-1}^d`` with nearest-neighbour edges, rooted at the origin."""
    shape = (side,) * d
    idx = np.arange(side ** d).reshape(shape)
    edges = []
    for axis in range(d):
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[axis] = slice(0, side - 1)
        hi[axis] = slice(1, side)
        edges.append(np.column_stack([idx[tuple(lo)].ravel(), idx[tuple(hi)].ravel()]))
    edges = np.concatenate(edges) if edges else np.zeros((0, 2), int)
    return RootedGraph.from_edges(edges, n_vertices=side ** d, name=f"box{d}")


def _tree_with_sphere_blocks(depth, block):
    """Binary tree plus, on each sphere ``n``, the symmetric block ``block(n, 2**n)``.

    Diagonal entries of the block are kept; they act like an extra potential
    on the sphere.
    """
    tree = kary_tree(2, depth)
    adj = tree.adj.tocoo()
    rows, cols, vals = [adj.row], [adj.col], [adj.data]
    for n in range(depth + 1):
        N = 2 ** n
        w = sp.coo_matrix(block(n, N))
        rows.append(w.row + N - 1)
        cols.append(w.col + N - 1)
        vals.append(w.data)
    shape = tree.adj.shape
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape).tocsr()


def circulant_cycle(N, gamma):
    """Weights of the N-cycle with weight gamma, accumulated as a circulant.

    Row ``j`` gets ``gamma`` at ``j + 1`` and at ``j - 1 (mod N)``. For
    ``N = 2`` both land on the same neighbour (weight ``2 gamma``) and for
    ``N = 1`` on the vertex itself (``2 gamma`` on the diagonal). This is the
    convention under which the Fourier symbol is ``2 gamma cos(2 pi j / N)``
    at every level.
    """
    row = np.zeros(N)
    row[1 % N] += gamma
    row[(N - 1) % N] += gamma
    return scipy.linalg.circulant(row).T


def regular_loop_tree(depth, gamma):
    """Binary tree whose n-th sphere carries an N-cycle of weight gamma (N = 2**n)."""
    return RootedGraph(_tree_with_sphere_blocks(depth, lambda n, N: circulant_cycle(N, gamma)),
                       name="regular_loop_tree")


def meanfield_loop_tree(depth, gamma, diagonal=True):
    """Binary tree whose n-th sphere carries the kernel ``gamma 2**-n`` on all pairs.

    With ``diagonal=True`` the kernel is the full rank-one block
    ``gamma 2**-n J`` including ``v = w``; otherwise the diagonal is dropped.
    """
    def block(n, N):
        b = np.full((N, N), gamma / N)
        if not diagonal:
            np.fill_diagonal(b, 0.0)
        return b

    return RootedGraph(_tree_with_sphere_blocks(depth, block), name="meanfield_loop_tree")


# sphere decomposition --------------------------------------------------------

@dataclass
class SphereDecomposition:
    """Spheres ``S_0..S_L`` with blocks ``D_n`` (|S_n| x |S_n|) and ``E_n`` (|S_{n+1}| x |S_n|).

    ``E_n`` is stored for ``n = 0..L-1``; forward edges out of ``S_L`` are
    not represented.
    """

    spheres: list
    D: list
    E: list

    @property
    def depth(self):
        return len(self.spheres) - 1

    def sizes(self):
        return [len(s) for s in self.spheres]


def bfs_distances(g):
    """Graph distance from the root; -1 for unreachable vertices."""
    d = csgraph.shortest_path(g.adj, unweighted=True, indices=g.root, directed=False)
    return np.where(np.isinf(d), -1, d).astype(np.int64)


def decompose_spheres(g, depth):
    """Cut `g` into spheres up to `depth` around the root."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    dist = bfs_distances(g)
    if np.any(dist < 0):
        warnings.warn(f"{int(np.sum(dist < 0))} vertices are unreachable from the root and are ignored",
                      RuntimeWarning, stacklevel=2)
    spheres = [np.flatnonzero(dist == n) for n in range(depth + 1)]
    adj = g.adj
    D = [adj[s][:, s] for s in spheres]
    E = [adj[spheres[n + 1]][:, spheres[n]] for n in range(depth) if spheres[n + 1].size]
    spheres = spheres[: len(E) + 1]
    return SphereDecomposition(spheres, D[: len(spheres)], E)


def check_kernel_condition(dec):
    """Per sphere, whether ``E_n`` has trivial kernel (rank ``|S_n|``)."""
    out = []
    for E in dec.E:
        E = sp.csr_matrix(E)
        ncols = E.shape[1]
        row_nnz = np.diff(E.indptr)
        if row_nnz.max(initial=0) <= 1:
            # disjoint supports: columns independent iff none is zero
            out.append(bool(np.all(np.abs(E).sum(axis=0).A1 > 0)))
            continue
        if E.shape[0] < ncols:
            out.append(False)
            continue
        s = scipy.linalg.svdvals(E.toarray())
        out.append(bool(np.sum(s > 1e-10 * s[0]) == ncols) if s.size else True)
    return out


# Siegel half-space --------------------------------------------------------------

@dataclass(frozen=True)
class SiegelPoint:
    """Complex symmetric matrix with positive definite imaginary part.

    A 1-D ``Z`` stands for the diagonal matrix ``diag(Z)``.
    """

    Z: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=complex)
        if Z.ndim == 2:
            if Z.shape[0] != Z.shape[1]:
                raise ValueError("Z must be square")
            scale = max(1.0, float(np.max(np.abs(Z), initial=0.0)))
            if np.max(np.abs(Z - Z.T), initial=0.0) > 1e-10 * scale:
                raise ValueError("Z must be symmetric (Z^T = Z)")
            if np.linalg.eigvalsh(Z.imag).min() <= 0:
                raise ValueError("Im Z must be positive definite")
        elif Z.ndim == 1:
            if np.any(Z.imag <= 0):
                raise ValueError("Im Z must be positive definite")
        else:
            raise ValueError("Z must be a matrix or a diagonal vector")
        object.__setattr__(self, "Z", Z)

    @property
    def dim(self):
        return self.Z.shape[0]

    @property
    def is_diagonal(self):
        return self.Z.ndim == 1

    def dense(self):
        return np.diag(self.Z) if self.is_diagonal else self.Z

    @classmethod
    def scalar(cls, z, d):
        return cls(np.full(d, complex(z)))


def _potential_blocks(pot, dec):
    if pot is None:
        return [np.zeros(len(s)) for s in dec.spheres]
    pot = np.asarray(pot, dtype=float)
    return [pot[s] for s in dec.spheres]


def siegel_mobius(Z, dec, n, q_n, lam):
    """One step ``-(E_n^T Z E_n + D_n - q_n + lam)^{-1}``.

    Diagonal input with a diagonal ``D_n`` and at most one backward edge per
    vertex of ``S_{n+1}`` (trees) stays on the diagonal fast path.
    """
    lam = check_lambda(lam)
    if not isinstance(Z, SiegelPoint):
        Z = SiegelPoint(Z)
    E = sp.csr_matrix(dec.E[n])
    D = sp.csr_matrix(dec.D[n])
    if E.shape[0] != Z.dim:
        raise ValueError(f"Z has dimension {Z.dim}, sphere {n + 1} has {E.shape[0]} vertices")
    q_n = np.broadcast_to(np.asarray(q_n, dtype=float), (E.shape[1],))

    if Z.is_diagonal and np.diff(E.indptr).max(initial=0) <= 1 and D.count_nonzero() == np.count_nonzero(D.diagonal()):
        # E^T diag(Z) E is diagonal when the rows of E have disjoint supports
        e2 = E.multiply(E).T
        denom = e2 @ Z.Z + D.diagonal() - q_n + lam
        if np.any(denom == 0):
            raise NumericalDegeneracyError(f"singular block at sphere {n}")
        return SiegelPoint(-1.0 / denom)

    Zd = Z.dense()
    M = (E.T @ sp.csr_matrix(Zd) @ E).toarray()
    M = M + D.toarray() + np.diag(lam - q_n)
    try:
        lu = scipy.linalg.lu_factor(M, check_finite=True)
        out = -scipy.linalg.lu_solve(lu, np.eye(M.shape[0], dtype=complex))
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise NumericalDegeneracyError(f"singular block at sphere {n}: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise NumericalDegeneracyError(f"singular block at sphere {n}")
    out = 0.5 * (out + out.T)
    return SiegelPoint(out)


def green_root_graph(g, pot, lam, depth, seed_matrix=None, dec=None, check_kernel=True):
    """Approximate ``G_lam(root, root)`` by folding :func:`siegel_mobius`.

    Parameters
    ----------
    g : RootedGraph
    pot : array of float or None
        Potential indexed by vertex id.
    lam : complex
        Spectral parameter, Im > 0.
    depth : int
        Steps ``Phi_depth, ..., Phi_0`` are applied; the seed sits on sphere
        ``depth + 1``.
    seed_matrix : complex, SiegelPoint or "dirichlet", optional
        Starting point on sphere ``depth + 1``. A scalar ``z`` means ``z I``
        (default ``i I``). ``"dirichlet"`` uses the Green block of sphere
        ``depth + 1`` alone, which reproduces the Dirichlet truncation at
        that sphere.
    """
    lam = check_lambda(lam, strict=True)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if dec is None:
        dec = decompose_spheres(g, depth + 1)
    if dec.depth < depth + 1:
        raise ValueError(f"graph has only {dec.depth} spheres beyond the root; need {depth + 1}")
    if check_kernel:
        for n, ok in enumerate(check_kernel_condition(dec)[: depth + 1]):
            if not ok:
                raise KernelConditionError(n)
    qs = _potential_blocks(pot, dec)
    d_last = len(dec.spheres[depth + 1])
    if seed_matrix is None:
        seed_matrix = 1j
    if isinstance(seed_matrix, str):
        if seed_matrix != "dirichlet":
            raise ValueError(f"unknown seed_matrix {seed_matrix!r}")
        D = sp.csr_matrix(dec.D[depth + 1])
        if D.count_nonzero() == np.count_nonzero(D.diagonal()):
            Z = SiegelPoint(-1.0 / (D.diagonal() - qs[depth + 1] + lam))
        else:
            M = D.toarray() + np.diag(lam - qs[depth + 1])
            Z = SiegelPoint(-np.linalg.inv(M))
    elif isinstance(seed_matrix, SiegelPoint):
        Z = seed_matrix
    else:
        Z = SiegelPoint.scalar(seed_matrix, d_last)
    for n in range(depth, -1, -1):
        Z = siegel_mobius(Z, dec, n, qs[n], lam)
    return HPoint(complex(Z.dense()[0, 0]))


# Finsler geometry ---------------------------------------------------------------------

def _inv_sqrt_psd(Y):
    w, V = np.linalg.eigh(Y)
    if w.min() < 1e-12:
        raise NumericalDegeneracyError(f"Im Z is nearly singular (smallest eigenvalue {w.min():.3g})")
    return (V / np.sqrt(w)) @ V.T


def finsler_norm(Z, W):
    """Length ``||Y^{-1/2} W Y^{-1/2}||_op`` of tangent `W` at ``Z = X + iY``."""
    Zd = Z.dense() if isinstance(Z, SiegelPoint) else np.atleast_2d(np.asarray(Z, dtype=complex))
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    if W.shape != Zd.shape:
        raise ValueError("dimension mismatch")
    R = _inv_sqrt_psd(Zd.imag)
    return float(np.linalg.norm(R @ W @ R, 2))


def finsler_path_upper(Z1, Z2, segments=1000):
    """Finsler length of the straight segment from `Z1` to `Z2` (midpoint rule).

    The segment stays in the Siegel half-space by convexity, so this is an
    upper bound for the Finsler distance, up to quadrature error.
    """
    A = Z1.dense() if isinstance(Z1, SiegelPoint) else np.atleast_2d(np.asarray(Z1, dtype=complex))
    B = Z2.dense() if isinstance(Z2, SiegelPoint) else np.atleast_2d(np.asarray(Z2, dtype=complex))
    if A.shape != B.shape:
        raise ValueError("dimension mismatch")
    W = B - A
    if not np.any(W):
        return 0.0
    h = 1.0 / segments
    if A.shape == (1, 1):
        t = (np.arange(segments) + 0.5) * h
        y = (1 - t) * A[0, 0].imag + t * B[0, 0].imag
        return float(np.sum(abs(W[0, 0]) / y) * h)
    total = 0.0
    for j in range(segments):
        t = (j + 0.5) * h
        Y = ((1 - t) * A + t * B).imag
        assert np.linalg.eigvalsh(Y).min() > 0, "segment left the Siegel half-space"
        total += finsler_norm((1 - t) * A + t * B, W)
    return total * h
