"""Green functions on k-ary rooted trees.

The root value satisfies ``G = Psi(G_1, ..., G_k, q, lam)`` with
``Psi = -1/(z_1 + ... + z_k + lam - q)``. For random potentials the law of
``G`` is approximated by a fixed-size population of samples (population
dynamics). The module also evaluates the contraction functionals ``mu_2,p``
and ``mu_3,p`` of the weighted moment ``M_p = E[cd(G)**p]`` and the
deterministic two-periodic potential criterion.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _streams
from .errors import (BoundaryUnderflowError, ConfigError, DegenerateDenominatorError,
                     IndeterminateError, InadmissibleModelError, NumericalDegeneracyError,
                     OutOfBandError)
from .halfplane import HPoint, cd_weight, check_lambda, ensure_upper

CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


# distributions ------------------------------------------------------------------

@dataclass(frozen=True)
class Distribution:
    """Compactly supported law of a single site potential.

    ``kind`` is ``"bernoulli_pm1"``, ``"uniform"`` (on ``[lo, hi]``) or
    ``"two_point"`` (``values[0]`` with probability ``p``, else ``values[1]``).
    """

    kind: str
    lo: float = -1.0
    hi: float = 1.0
    p: float = 0.5
    values: tuple = (-1.0, 1.0)

    @classmethod
    def from_json(cls, spec):
        if not isinstance(spec, dict) or "type" not in spec:
            raise ConfigError("distribution needs a 'type'", key="type")
        kind = spec["type"]
        allowed = {"bernoulli_pm1": {"type"}, "uniform": {"type", "lo", "hi"},
                   "two_point": {"type", "p", "values"}}
        if kind not in allowed:
            raise ConfigError(f"unknown distribution type {kind!r}", key="type")
        extra = set(spec) - allowed[kind]
        if extra:
            raise ConfigError(f"unknown keys {sorted(extra)}", key=sorted(extra)[0])
        if kind == "uniform":
            d = cls(kind, lo=float(spec.get("lo", -1.0)), hi=float(spec.get("hi", 1.0)))
        elif kind == "two_point":
            vals = spec.get("values")
            if vals is None or len(vals) != 2:
                raise ConfigError("two_point needs two values", key="values")
            d = cls(kind, p=float(spec.get("p", 0.5)), values=(float(vals[0]), float(vals[1])))
        else:
            d = cls(kind)
        d.validate()
        return d

    @property
    def mean(self):
        if self.kind == "bernoulli_pm1":
            return 0.0
        if self.kind == "uniform":
            return 0.5 * (self.lo + self.hi)
        return self.p * self.values[0] + (1 - self.p) * self.values[1]

    @property
    def second_moment(self):
        if self.kind == "bernoulli_pm1":
            return 1.0
        if self.kind == "uniform":
            return (self.lo ** 2 + self.lo * self.hi + self.hi ** 2) / 3.0
        return self.p * self.values[0] ** 2 + (1 - self.p) * self.values[1] ** 2

    @property
    def bound(self):
        if self.kind == "bernoulli_pm1":
            return 1.0
        if self.kind == "uniform":
            return max(abs(self.lo), abs(self.hi))
        return max(abs(v) for v in self.values)

    def validate(self):
        if self.kind == "uniform" and not self.lo < self.hi:
            raise ConfigError("uniform needs lo < hi", key="lo")
        if self.kind == "two_point" and not 0 <= self.p <= 1:
            raise ConfigError("two_point needs 0 <= p <= 1", key="p")
        if abs(self.mean) > 1e-12:
            raise ConfigError(f"potential law must have mean zero (mean = {self.mean:g})", key="type")

    def sample(self, rng, n):
        if self.kind == "bernoulli_pm1":
            return 2.0 * rng.integers(0, 2, size=n) - 1.0
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size=n)
        return np.where(rng.random(n) < self.p, self.values[0], self.values[1])


@dataclass(frozen=True)
class JointDistribution:
    """Law of the pair ``(q1, q2)`` given by atoms and probabilities."""

    atoms: tuple
    probs: tuple

    def __post_init__(self):
        atoms = tuple((float(a), float(b)) for a, b in self.atoms)
        probs = tuple(float(p) for p in self.probs)
        if len(atoms) != len(probs) or not atoms:
            raise ConfigError("joint law needs matching atoms and probs", key="atoms")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1) > 1e-12:
            raise ConfigError("joint probabilities must be nonnegative and sum to 1", key="probs")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_json(cls, spec):
        if "atoms" not in spec or "probs" not in spec:
            raise ConfigError("joint law needs 'atoms' and 'probs'", key="atoms")
        extra = set(spec) - {"type", "atoms", "probs"}
        if extra:
            raise ConfigError(f"unknown keys {sorted(extra)}", key=sorted(extra)[0])
        return cls(tuple(map(tuple, spec["atoms"])), tuple(spec["probs"]))

    @classmethod
    def independent(cls, marginal_values=(-1.0, 1.0)):
        v = marginal_values
        m = len(v)
        return cls(tuple((a, b) for a in v for b in v), (1.0 / m ** 2,) * m ** 2)

    @classmethod
    def fully_correlated(cls, marginal_values=(-1.0, 1.0)):
        return cls(tuple((a, a) for a in marginal_values), (1.0 / len(marginal_values),) * len(marginal_values))

    def _arr(self):
        return np.asarray(self.atoms), np.asarray(self.probs)

    def moments(self):
        """``(c11, c22, c12)``, the second moments of the pair."""
        a, p = self._arr()
        return float(p @ a[:, 0] ** 2), float(p @ a[:, 1] ** 2), float(p @ (a[:, 0] * a[:, 1]))

    def means(self):
        a, p = self._arr()
        return float(p @ a[:, 0]), float(p @ a[:, 1])

    def validate(self):
        a, _ = self._arr()
        if np.max(np.abs(a)) > 1 + 1e-12:
            raise ConfigError("two-periodic atoms must satisfy |q1|, |q2| <= 1", key="atoms")
        m1, m2 = self.means()
        if abs(m1) > 1e-12 or abs(m2) > 1e-12:
            raise ConfigError("two-periodic law must be centred", key="atoms")

    def sample(self, rng, n):
        a, p = self._arr()
        idx = rng.choice(len(p), size=n, p=p)
        return a[idx, 0], a[idx, 1]


# model and pool -------------------------------------------------------------------

@dataclass
class TreeModel:
    """Potential model on the k-ary tree.

    ``kind`` is ``"none"``, ``"iid"`` (law `dist` scaled by `a`),
    ``"two_periodic"`` (pair law `joint` repeated across each sphere, root
    law `root_dist`, scaled by `a`) or ``"oscillating"`` (``+delta0`` on even,
    ``-delta0`` on odd positions of each sphere, plus modulations
    ``delta1(n)``, ``delta2(n)``).
    """

    k: int = 2
    kind: str = "none"
    a: float = 0.0
    dist: Optional[Distribution] = None
    joint: Optional[JointDistribution] = None
    root_dist: Optional[Distribution] = None
    delta0: float = 0.0
    delta1: Optional[object] = None
    delta2: Optional[object] = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("tree branching must be >= 2")
        if self.kind not in ("none", "iid", "two_periodic", "oscillating"):
            raise ValueError(f"unknown tree model {self.kind!r}")
        if self.kind == "iid":
            if self.dist is None:
                raise ValueError("iid model needs a distribution")
            self.dist.validate()
        if self.kind == "two_periodic":
            if self.joint is None:
                raise ValueError("two_periodic model needs a joint law")
            if self.k != 2:
                raise ValueError("two_periodic model is defined on the binary tree")
            self.joint.validate()

    @classmethod
    def iid(cls, dist, a, k=2):
        return cls(k=k, kind="iid", a=a, dist=dist)

    @classmethod
    def two_periodic(cls, joint, a, root_dist=None):
        return cls(k=2, kind="two_periodic", a=a, joint=joint, root_dist=root_dist)


@dataclass
class SamplePool:
    """Population of samples in H approximating a Green-function law.

    For the two-periodic sampler each member is one realisation and
    `partner` holds its odd-position value next to the even-position value
    in `samples`.
    """

    samples: np.ndarray
    lam: complex
    generation: int
    k: int = 2
    partner: Optional[np.ndarray] = None
    trace: list = field(default_factory=list)
    converged: bool = False

    def __post_init__(self):
        ensure_upper(self.samples, "pool sample")

    @property
    def size(self):
        return len(self.samples)

    def values(self):
        return self.samples if self.partner is None else np.concatenate([self.samples, self.partner])


# recursion -------------------------------------------------------------------------

def psi_step(zs, q, lam):
    """``-1/(z_1 + ... + z_k + lam - q)``; `zs` is a sequence of k points."""
    lam = check_lambda(lam)
    zs = [complex(z) for z in zs] if not isinstance(zs, np.ndarray) else zs
    if len(zs) < 1:
        raise ValueError("psi_step needs at least one point")
    denom = sum(zs) + lam - q
    if np.any(np.asarray(denom) == 0):
        raise DegenerateDenominatorError("z_1 + ... + z_k + lam - q vanished")
    w = -1.0 / denom
    ensure_upper(w, "Psi image")
    return HPoint(complex(w)) if np.ndim(w) == 0 else w


def tree_fixed_point(k, lam):
    """Root in H of ``k z**2 + lam z + 1 = 0``; ``G(0,0)`` of the free k-ary tree.

    For real ``|lam| < 2 sqrt(k)`` this is
    ``-lam/(2k) + i sqrt(1/k - lam**2/(4k**2))``.
    """
    lam = check_lambda(lam)
    lam_arr = np.asarray(lam, dtype=complex)
    if np.any((lam_arr.imag == 0) & (np.abs(lam_arr.real) >= 2 * math.sqrt(k))):
        raise OutOfBandError(f"real lambda with |lambda| >= 2 sqrt({k}) has no fixed point in H")
    r = np.sqrt(lam_arr * lam_arr - 4 * k + 0j)
    a = (-lam_arr + r) / (2 * k)
    b = (-lam_arr - r) / (2 * k)
    z = np.where(a.imag > b.imag, a, b)
    real = lam_arr.imag == 0
    z = np.where(real, -lam_arr.real / (2 * k) + 1j * np.sqrt(np.abs(1 / k - lam_arr.real ** 2 / (4 * k * k))), z)
    return HPoint(complex(z)) if z.ndim == 0 else z


def _check_pool_args(lam, pool_size, generations):
    lam = check_lambda(lam, strict=True)
    if pool_size < 10:
        raise ValueError("pool_size must be >= 10")
    if generations < 1:
        raise ValueError("generations must be >= 1")
    return lam


def moment_Mp(pool, p, z_ref=None):
    """Empirical ``M_p``: mean of ``cd(z, z_ref)**p`` over the pool.

    `pool` is a :class:`SamplePool` or an array of samples. `z_ref` defaults
    to the free fixed point at the pool's spectral parameter.
    """
    if p <= 1:
        raise ValueError("moment exponent must be > 1")
    if isinstance(pool, SamplePool):
        if z_ref is None:
            z_ref = tree_fixed_point(pool.k, pool.lam)
        vals = pool.values()
    else:
        vals = np.asarray(pool, dtype=complex)
        if z_ref is None:
            raise ValueError("z_ref required for a bare sample array")
    return float(np.mean(cd_weight(vals, z_ref) ** p))


def moment_stderr(pool, p, z_ref=None):
    """Standard error of :func:`moment_Mp` (samples treated as independent)."""
    if isinstance(pool, SamplePool):
        if z_ref is None:
            z_ref = tree_fixed_point(pool.k, pool.lam)
        vals = pool.values()
    else:
        vals = np.asarray(pool, dtype=complex)
    w = cd_weight(vals, z_ref) ** p
    return float(np.std(w, ddof=1) / math.sqrt(len(w)))


def _monitor(pool_vals, k, lam, p, z_ref, trace, gen):
    m = float(np.mean(cd_weight(pool_vals, z_ref) ** p))
    trace.append((gen, m))
    if len(trace) >= 2:
        prev = trace[-2][1]
        return abs(m - prev) <= 0.01 * max(abs(prev), 1e-300) or m < 1e-12
    return False


def population_green(model, lam, pool_size=100_000, generations=300, seed=0, threads=1,
                     init=None, p=1.5, monitor_every=20):
    """Population dynamics for the law of ``G_lam(0, 0)`` on the k-ary tree.

    Every generation replaces the whole pool: new sample ``j`` is
    ``Psi(z_{i_1}, ..., z_{i_k}, a q_j, lam)`` with indices drawn uniformly
    with replacement and a fresh ``q_j``. Draws for the block of slots
    ``[c*CHUNK, (c+1)*CHUNK)`` of generation ``g`` come from the stream
    keyed ``(seed, g, c)``, so the result does not depend on `threads`.

    Parameters
    ----------
    model : TreeModel
        ``"none"`` or ``"iid"``.
    lam : complex
        Spectral parameter, Im > 0.
    init : complex or array, optional
        Initial pool; default is the free fixed point at `lam`.
    p : float
        Exponent of the ``M_p`` convergence monitor, evaluated every
        `monitor_every` generations against the free fixed point.

    Returns
    -------
    SamplePool
    """
    lam = _check_pool_args(lam, pool_size, generations)
    if model.kind not in ("none", "iid"):
        raise ValueError(f"population_green does not handle {model.kind!r} models")
    k = model.k
    z_ref = complex(tree_fixed_point(k, lam))
    pool = np.full(pool_size, z_ref if init is None else complex(init), dtype=complex) \
        if np.ndim(init) == 0 else np.asarray(init, dtype=complex).copy()
    if pool.shape != (pool_size,):
        raise ValueError("init has the wrong length")
    scale = model.a if model.kind == "iid" else 0.0
    trace, converged = [], False

    for g in range(1, generations + 1):
        old = pool

        def build(c, lo, hi, old=old, g=g):
            rng = _streams.generator(seed, g, c)
            idx = rng.integers(0, pool_size, size=(k, hi - lo))
            s = old[idx].sum(axis=0) + lam
            if scale:
                s = s - scale * model.dist.sample(rng, hi - lo)
            return -1.0 / s

        pool = np.concatenate(_streams.map_chunks(build, pool_size, threads))
        if not (np.all(np.isfinite(pool)) and np.all(pool.imag > 0)):
            raise BoundaryUnderflowError(f"pool sample left H at generation {g}")
        if g % monitor_every == 0:
            converged = _monitor(pool, k, lam, p, z_ref, trace, g)
    return SamplePool(pool, lam, generations, k, trace=trace, converged=converged)


def two_periodic_population(model, lam, pool_size=100_000, generations=300, seed=0, threads=1,
                            init=None, allow_inadmissible=False, p=1.5, monitor_every=20):
    """Sampler for transversely two-periodic potentials on the binary tree.

    A pair ``(q1, q2)`` drawn per sphere and repeated across it makes all
    even-position vertices of a sphere carry one Green value ``x`` and all
    odd-position vertices another value ``y``. Each pool member is therefore
    one realisation ``(x, y)`` advanced by

        x' = -1/(x + y + lam - a q1),   y' = -1/(x + y + lam - a q2)

    with its own fresh pair every generation; no resampling. Draws for
    slots ``[c*CHUNK, (c+1)*CHUNK)`` of generation ``g`` come from the stream
    ``(seed, g, c)``.
    """
    lam = _check_pool_args(lam, pool_size, generations)
    if model.kind != "two_periodic":
        raise ValueError("two_periodic_population needs a two_periodic model")
    c11, c22, c12 = model.joint.moments()
    if c11 + c22 > 0:
        delta, ok = correlation_delta(c11, c22, c12)
        if not ok and not allow_inadmissible:
            raise InadmissibleModelError(f"correlation delta = {delta:g} >= 1/2; pass allow_inadmissible=True")
    z_ref = complex(tree_fixed_point(2, lam))
    start = z_ref if init is None else complex(init)
    x = np.full(pool_size, start, dtype=complex)
    y = x.copy()
    trace, converged = [], False
    a = model.a
    for g in range(1, generations + 1):
        xo, yo = x, y

        def build(c, lo, hi, xo=xo, yo=yo, g=g):
            rng = _streams.generator(seed, g, c)
            q1, q2 = model.joint.sample(rng, hi - lo)
            s = xo[lo:hi] + yo[lo:hi] + lam
            return -1.0 / (s - a * q1), -1.0 / (s - a * q2)

        parts = _streams.map_chunks(build, pool_size, threads)
        x = np.concatenate([u for u, _ in parts])
        y = np.concatenate([v for _, v in parts])
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(x.imag > 0) and np.all(y.imag > 0)):
            raise BoundaryUnderflowError(f"pool sample left H at generation {g}")
        if g % monitor_every == 0:
            converged = _monitor(np.concatenate([x, y]), 2, lam, p, z_ref, trace, g)
    return SamplePool(x, lam, generations, 2, partner=y, trace=trace, converged=converged)


def two_periodic_root(pool, model, seed=0):
    """Root values ``-1/(x + y + lam - a q_0)`` with ``q_0`` from the root law."""
    rng = _streams.generator(seed, 0, 0)
    q0 = model.root_dist.sample(rng, pool.size) if model.root_dist is not None else 0.0
    return -1.0 / (pool.samples + pool.partner + pool.lam - model.a * q0)


# contraction functionals ------------------------------------------------------------

def _cdp(z, z_ref, p):
    return cd_weight(z, z_ref) ** p


def _mu2p_raw(z1, z2, q, lam, p, z_ref):
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    num = _cdp(-1.0 / (z1 + z2 + lam - q), z_ref, p)
    den = 0.5 * _cdp(z1, z_ref, p) + 0.5 * _cdp(z2, z_ref, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.asarray(num) / np.asarray(den), np.asarray(den)


def mu2p(z1, z2, q, lam, p, z_ref=None):
    """One-level ratio ``cd^p(Psi(z1, z2, q)) / (cd^p(z1)/2 + cd^p(z2)/2)``.

    ``cd`` is taken relative to `z_ref`, by default the binary-tree fixed
    point at `lam`. Vectorised.
    """
    lam = check_lambda(lam)
    if z_ref is None:
        z_ref = tree_fixed_point(2, lam)
    val, den = _mu2p_raw(z1, z2, q, lam, p, z_ref)
    if np.any(den == 0):
        raise IndeterminateError("mu_2,p is 0/0 at z1 = z2 = z_lambda")
    return float(val) if val.ndim == 0 else val


def blowup_coordinates(z1, z2, lam):
    """Radial coordinates of ``(z1, z2)`` for real `lam`.

    With ``u_j = (z_j - z_lam)/sqrt(Im z_j)`` the pair ``(1/u_1, 1/u_2)`` is
    written as ``r (omega_1, omega_2)`` with ``|omega| = 1``. Returns
    ``(omega, v, r, y_total)`` where ``v_j = sqrt(y_j / (y_1 + y_2))``.
    """
    lam = float(np.real(lam))
    zl = complex(tree_fixed_point(2, lam))
    z = np.array([z1, z2], dtype=complex)
    u = (z - zl) / np.sqrt(z.imag)
    inv = 1.0 / u
    r = float(np.linalg.norm(inv))
    y_total = float(z.imag.sum())
    return inv / r, np.sqrt(z.imag / y_total), r, y_total


def mu2p_boundary(omega, v, q, lam, p, r, y_total=1.0):
    """``mu_2,p`` in radial coordinates (real `lam`).

    Exact form, with ``A = v_1 omega_2 + v_2 omega_1``::

        (|A - q r omega_1 omega_2 / sqrt(y_total)|**2 / 2)**p
        / (|omega_1|**(2p) / 2 + |omega_2|**(2p) / 2)

    At ``r = 0`` it reduces to ``(|A|**2 / 2)**p / (...)``, which extends the
    ratio continuously to the boundary.
    """
    omega = np.asarray(omega, dtype=complex)
    v = np.asarray(v, dtype=float)
    if abs(np.sum(np.abs(omega) ** 2) - 1) > 1e-12:
        raise ValueError("omega must be a unit vector")
    if r < 0:
        raise ValueError("r must be >= 0")
    A = v[0] * omega[1] + v[1] * omega[0]
    B = A - q * r * omega[0] * omega[1] / math.sqrt(y_total)
    num = (0.5 * abs(B) ** 2) ** p
    den = 0.5 * abs(omega[0]) ** (2 * p) + 0.5 * abs(omega[1]) ** (2 * p)
    return float(num / den)


def nj_weights(zs, lam, p, z_ref=None):
    """``n_j = cd^p(z_j) / sum_i cd^p(z_i)`` for three points; vectorised over a trailing axis."""
    lam = check_lambda(lam)
    if z_ref is None:
        z_ref = tree_fixed_point(2, lam)
    c = np.stack([_cdp(np.asarray(z, dtype=complex), z_ref, p) for z in zs])
    s = c.sum(axis=0)
    if np.any(s == 0):
        raise IndeterminateError("all three points equal z_lambda")
    return c / s


@dataclass(frozen=True)
class Mu3Result:
    value: object
    reconstruction: object


def _mu3p_arrays(zs, qs, lam, p, z_ref):
    zs = [np.asarray(z, dtype=complex) for z in zs]
    q1, q2 = qs
    cds = [_cdp(z, z_ref, p) for z in zs]
    total = cds[0] + cds[1] + cds[2]
    if np.any(total == 0):
        raise IndeterminateError("mu_3,p is 0/0 when all points equal z_lambda")
    direct = 0.0
    recon = 0.0
    n = [c / total for c in cds]
    for s1, s2, s3 in CYCLIC:
        w = -1.0 / (zs[s2] + zs[s3] + lam - q2)
        top = -1.0 / (zs[s1] + w + lam - q1)
        direct = direct + _cdp(top, z_ref, p)
        outer, _ = _mu2p_raw(zs[s1], w, q1, lam, p, z_ref)
        inner, _ = _mu2p_raw(zs[s2], zs[s3], q2, lam, p, z_ref)
        inner = np.nan_to_num(inner, nan=0.0)
        weight = 0.5 * n[s1] + 0.25 * inner * (n[s2] + n[s3])
        # a vanishing weight makes the 0/0 ratio irrelevant
        recon = recon + np.where(weight == 0, 0.0, np.nan_to_num(outer, nan=0.0) * weight)
    return direct / total, recon


def mu3p(zs, qs, lam, p, z_ref=None, tol=1e-9):
    """Two-level ratio summed over the cyclic permutations of three points.

    Returns a :class:`Mu3Result` with the direct value and its reconstruction
    from ``mu_2,p`` and the ``n_j`` weights; raises
    :class:`NumericalDegeneracyError` if they differ by more than `tol`
    (relative to ``max(1, value)``). Vectorised over arrays of points.
    """
    lam = check_lambda(lam)
    if z_ref is None:
        z_ref = tree_fixed_point(2, lam)
    direct, recon = _mu3p_arrays(zs, qs, lam, p, z_ref)
    err = np.abs(direct - recon) / np.maximum(1.0, np.abs(direct))
    if np.any(err > tol):
        raise NumericalDegeneracyError(f"mu_3,p reconstruction mismatch {np.max(err):.3g}")
    if np.ndim(direct) == 0:
        return Mu3Result(float(direct), float(recon))
    return Mu3Result(direct, recon)


def mu3p_boundary_scan(lam, p, im_floors=(1e-4, 1e-5, 1e-6), samples=20_000, seed=0, re_range=3.0):
    """Largest ``mu_3,p(z, 0, lam)`` over random triples with ``Im z_j`` at a floor.

    Returns ``{floor: (max value, margin 1 - max value)}``. The margin is an
    empirical observation on the sampled configurations, not a bound.
    """
    out = {}
    for i, floor in enumerate(im_floors):
        rng = _streams.generator(seed, i)
        xs = rng.uniform(-re_range, re_range, size=(3, samples))
        zs = list(xs + 1j * floor)
        val = mu3p(zs, (0.0, 0.0), float(lam), p).value
        vmax = float(np.max(val))
        out[floor] = (vmax, 1.0 - vmax)
    return out


# deterministic two-periodic potential ------------------------------------------------

def _cubic_coeffs(lam, delta):
    return 1.0, 2.0 * lam, 2.0 + lam * lam - delta * delta, 2.0 * lam


def cubic_discriminant(lam, delta):
    a, b, c, d = _cubic_coeffs(lam, delta)
    return 18 * a * b * c * d - 4 * b ** 3 * d + b * b * c * c - 4 * a * c ** 3 - 27 * a * a * d * d


def cardano_roots(a, b, c, d):
    """Roots of ``a z**3 + b z**2 + c z + d`` by Cardano's formula."""
    b, c, d = b / a, c / a, d / a
    p = c - b * b / 3
    q = 2 * b ** 3 / 27 - b * c / 3 + d
    shift = -b / 3
    if p == 0 and q == 0:
        return [complex(shift)] * 3
    omega = complex(-0.5, math.sqrt(3) / 2)
    disc = cmath.sqrt(q * q / 4 + p ** 3 / 27)
    u3 = -q / 2 + disc
    if abs(u3) < abs(-q / 2 - disc):
        u3 = -q / 2 - disc
    u = u3 ** (1 / 3)
    roots = []
    for j in range(3):
        uj = u * omega ** j
        roots.append(uj - p / (3 * uj) + shift)
    return roots


def oscillating_ac_test(lam, delta, band=1e-9):
    """Classify ``lam`` for the potential ``+-delta`` alternating across spheres.

    The Green function of the even/odd sum solves
    ``z**3 + 2 lam z**2 + (2 + lam**2 - delta**2) z + 2 lam = 0``. One real
    root with a complex-conjugate pair means ``"ac_interior"``, three real
    roots ``"not_ac"``; a discriminant within `band` of zero is
    ``"boundary"``.
    """
    lam = float(lam)
    delta = float(delta)
    disc = cubic_discriminant(lam, delta)
    if abs(disc) <= band:
        return "boundary"
    return "ac_interior" if disc < 0 else "not_ac"


def oscillating_roots(lam, delta):
    return cardano_roots(*_cubic_coeffs(float(lam), float(delta)))


def oscillating_green(lam, delta0, depth=None, delta1=None, delta2=None, start=1j):
    """Even/odd Green values ``(x, y)`` at the top sphere of the oscillating potential.

    Even positions carry ``delta0 + delta1(n)``, odd ones ``-delta0 +
    delta2(n)``. The fold runs from sphere `depth` to sphere 1; the sum
    ``x + y`` converges to the root of the cubic in H.
    """
    lam = check_lambda(lam, strict=True)
    if depth is None:
        depth = int(min(math.ceil(8.0 / lam.imag), 10 ** 6))
    x = y = complex(start)
    for n in range(depth, 0, -1):
        s = x + y + lam
        d1 = delta1(n) if delta1 is not None else 0.0
        d2 = delta2(n) if delta2 is not None else 0.0
        x, y = -1.0 / (s - delta0 - d1), -1.0 / (s + delta0 - d2)
    return HPoint(x), HPoint(y)


def correlation_delta(c11, c22, c12):
    """``delta = 2 c12 / (c11 + c22)`` and whether it is admissible (< 1/2)."""
    c = c11 + c22
    if c <= 0:
        raise ZeroDivisionError("correlation delta needs c11 + c22 > 0")
    delta = 2.0 * c12 / c
    return delta, delta < 0.5
