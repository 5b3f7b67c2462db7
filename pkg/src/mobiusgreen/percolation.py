"""Binary tree with one forward edge removed at random per vertex.

At each vertex both forward edges survive with probability ``1 - q`` and
exactly one of them is deleted otherwise (left or right with probability
``q/2`` each). Since every vertex keeps a forward edge the cluster of the
root is infinite even for ``q = 1``, where it is a half-line.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import _streams
from .errors import (BoundaryUnderflowError, DegenerateDenominatorError, IndeterminateError,
                     NumericalDegeneracyError)
from .halfplane import HPoint, cd_weight, check_lambda, ensure_upper
from .tree import CYCLIC, SamplePool, _check_pool_args, _monitor, mu3p, tree_fixed_point

OUTCOMES = ("both", "only_left", "only_right")


@dataclass(frozen=True)
class PercolationSpec:
    q_del: float

    def __post_init__(self):
        if not 0 <= self.q_del <= 1:
            raise ValueError("q_del must lie in [0, 1]")

    @property
    def probabilities(self):
        q = self.q_del
        return (1 - q, q / 2, q / 2)


def _step(z1, z2, lam, outcome):
    if outcome == "both":
        return -1.0 / (z1 + z2 + lam)
    if outcome == "only_left":
        return -1.0 / (z1 + lam)
    if outcome == "only_right":
        return -1.0 / (z2 + lam)
    raise ValueError(f"unknown outcome {outcome!r}")


def percolation_step(z1, z2, lam, outcome):
    """Green value at a vertex from its children's values and the edge outcome."""
    lam = check_lambda(lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = _step(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex), lam, outcome)
    if not np.all(np.isfinite(w)):
        raise DegenerateDenominatorError("percolation step denominator vanished")
    ensure_upper(w, "percolation image")
    return HPoint(complex(w)) if np.ndim(w) == 0 else w


def percolation_population(spec, lam, pool_size=100_000, generations=300, seed=0, threads=1,
                           init=None, p=1.5, monitor_every=20, return_outcomes=False):
    """Population dynamics for the root Green value of the percolation tree.

    The outcome of each new sample is ``both``, ``only_left`` or
    ``only_right`` with probabilities ``(1 - q, q/2, q/2)``; two pool members
    are drawn uniformly with replacement as the children. Draws for slots
    ``[c*CHUNK, (c+1)*CHUNK)`` of generation ``g`` use the stream
    ``(seed, g, c)``. The pool starts at the binary-tree fixed point unless
    `init` is given.

    With ``return_outcomes=True`` also returns the per-generation outcome
    counts as an array of shape ``(generations, 3)``.
    """
    lam = _check_pool_args(lam, pool_size, generations)
    z_ref = complex(tree_fixed_point(2, lam))
    pool = np.full(pool_size, z_ref if init is None else complex(init), dtype=complex)
    cum = np.cumsum(spec.probabilities)
    counts = np.zeros((generations, 3), dtype=np.int64)
    trace, converged = [], False
    for g in range(1, generations + 1):
        old = pool

        def build(c, lo, hi, old=old, g=g):
            rng = _streams.generator(seed, g, c)
            n = hi - lo
            idx = rng.integers(0, pool_size, size=(2, n))
            u = rng.random(n)
            outcome = np.searchsorted(cum, u, side="right").clip(max=2)
            z1, z2 = old[idx[0]], old[idx[1]]
            s = np.where(outcome == 0, z1 + z2, np.where(outcome == 1, z1, z2)) + lam
            return -1.0 / s, np.bincount(outcome, minlength=3)

        parts = _streams.map_chunks(build, pool_size, threads)
        pool = np.concatenate([w for w, _ in parts])
        counts[g - 1] = np.sum([c for _, c in parts], axis=0)
        if not (np.all(np.isfinite(pool)) and np.all(pool.imag > 0)):
            raise BoundaryUnderflowError(f"pool sample left H at generation {g}")
        if g % monitor_every == 0:
            converged = _monitor(pool, 2, lam, p, z_ref, trace, g)
    out = SamplePool(pool, lam, generations, 2, trace=trace, converged=converged)
    return (out, counts) if return_outcomes else out


def _cdp(z, z_ref, p):
    return cd_weight(z, z_ref) ** p


def mu2pq(z1, z2, lam, p, q_del, z_ref=None):
    """One-level ratio for the percolation tree.

    ``[q (cd^p(-1/(z1+lam)) + cd^p(-1/(z2+lam)))/2 + (1-q) cd^p(-1/(z1+z2+lam))]``
    divided by ``cd^p(z1)/2 + cd^p(z2)/2``; ``cd`` relative to the binary-tree
    fixed point. The deleted-edge term is symmetrised in ``z1, z2``.
    """
    lam = check_lambda(lam)
    if z_ref is None:
        z_ref = tree_fixed_point(2, lam)
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    num = (1 - q_del) * _cdp(-1.0 / (z1 + z2 + lam), z_ref, p) \
        + q_del * 0.5 * (_cdp(-1.0 / (z1 + lam), z_ref, p) + _cdp(-1.0 / (z2 + lam), z_ref, p))
    den = 0.5 * _cdp(z1, z_ref, p) + 0.5 * _cdp(z2, z_ref, p)
    if np.any(np.asarray(den) == 0):
        raise IndeterminateError("mu_2,p,q is 0/0 at z1 = z2 = z_lambda")
    val = np.asarray(num) / den
    return float(val) if val.ndim == 0 else val


def mu3pq_decomposition(zs, lam, p, q_del, z_ref=None, tol=1e-9):
    """Two-level percolation ratio and its split ``(1-q)**2 mu_3,p + q R``.

    The total averages ``cd^p`` of the two-level composite over all nine
    pairs of outcomes (outer vertex, inner vertex), summed over the cyclic
    permutations and divided by ``sum_j cd^p(z_j)``. The smooth part is
    ``(1-q)**2`` times the tree functional at zero potential; the remainder
    collects the eight outcome pairs involving a deletion. Returns
    ``(total, smooth_part, remainder)``.
    """
    lam = check_lambda(lam)
    if z_ref is None:
        z_ref = tree_fixed_point(2, lam)
    zs = [np.asarray(z, dtype=complex) for z in zs]
    cds = sum(_cdp(z, z_ref, p) for z in zs)
    if np.any(cds == 0):
        raise IndeterminateError("mu_3,p,q is 0/0 when all points equal z_lambda")
    probs = dict(zip(OUTCOMES, PercolationSpec(q_del).probabilities))
    total = 0.0
    remainder = 0.0
    for s1, s2, s3 in CYCLIC:
        for o_out, o_in in product(OUTCOMES, OUTCOMES):
            w = _step(zs[s2], zs[s3], lam, o_in)
            term = probs[o_out] * probs[o_in] * _cdp(_step(zs[s1], w, lam, o_out), z_ref, p)
            total = total + term
            if (o_out, o_in) != ("both", "both"):
                remainder = remainder + term
    total = total / cds
    remainder = remainder / cds
    smooth = (1 - q_del) ** 2 * np.asarray(mu3p(zs, (0.0, 0.0), lam, p, z_ref=z_ref).value)
    err = np.abs(total - (smooth + remainder)) / np.maximum(1.0, np.abs(total))
    if np.any(err > tol):
        raise NumericalDegeneracyError(f"decomposition mismatch {np.max(err):.3g}")
    if np.ndim(total) == 0:
        return float(total), float(smooth), float(remainder)
    return total, smooth, remainder
