"""Green functions of Schroedinger operators on the half-line N_0.

The root value ``G_lam(0, 0)`` is obtained by folding Mobius steps from the
deep end of a finite stretch of the chain toward the root; the start value
is irrelevant in the limit.

Besides the recursion itself this module carries the certificate sums used
to show boundedness of ``G`` as ``Im lam -> 0`` for short-range and slowly
varying potentials, and a Monte Carlo check of the second-moment bound for
square-summable random potentials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import _streams
from .errors import BoundaryUnderflowError, OutOfBandError
from .halfplane import HPoint, cd_weight, check_lambda, ensure_upper, poincare_dist

SITE_BLOCK = 1024

_UNIT_SAMPLERS = {
    # unit variance, mean zero
    "bernoulli_pm1": (1.0, lambda rng, size: rng.choice((-1.0, 1.0), size=size)),
    "uniform": (math.sqrt(3.0), lambda rng, size: rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=size)),
}


@dataclass(frozen=True)
class PotentialSeq:
    """A bounded potential ``n -> q_n`` on N_0.

    Use the constructors (:meth:`zero`, :meth:`explicit`, :meth:`l1_decay`,
    :meth:`mourre`, :meth:`random_centered`) rather than the raw fields.
    Random potentials draw site ``n`` of realisation ``trial`` from a stream
    keyed by ``(seed, trial, n // SITE_BLOCK)``, so a shallow site never
    changes when the depth does.
    """

    kind: str
    bound: float
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    variance: Optional[Callable[[np.ndarray], np.ndarray]] = None
    distribution: str = "bernoulli_pm1"
    seed: Optional[int] = None
    params: dict = field(default_factory=dict, compare=False)

    @classmethod
    def zero(cls):
        return cls("zero", 0.0, func=lambda n: np.zeros(np.shape(n)))

    @classmethod
    def explicit(cls, values):
        vals = np.asarray(values, dtype=float)

        def func(n):
            n = np.asarray(n)
            out = np.zeros(n.shape)
            inside = n < vals.size
            out[inside] = vals[n[inside]]
            return out

        return cls("explicit", float(np.max(np.abs(vals), initial=0.0)), func=func,
                   params={"values": vals.tolist()})

    @classmethod
    def l1_decay(cls, amplitude, rate):
        """``q_n = amplitude * rate**n`` with ``0 <= rate < 1``."""
        if not 0 <= rate < 1:
            raise ValueError("l1_decay needs 0 <= rate < 1")
        return cls("l1_decay", abs(amplitude), func=lambda n: amplitude * rate ** np.asarray(n, float),
                   params={"amplitude": amplitude, "rate": rate})

    @classmethod
    def mourre(cls, q_inf, amplitude, power=1.0):
        """``q_n = q_inf + amplitude / (n + 1)**power``; bounded variation."""
        return cls("mourre", abs(q_inf) + abs(amplitude),
                   func=lambda n: q_inf + amplitude / (np.asarray(n, float) + 1.0) ** power,
                   params={"q_inf": q_inf, "amplitude": amplitude, "power": power})

    @classmethod
    def random_centered(cls, variance, distribution="bernoulli_pm1", seed=None, max_variance=None):
        """Independent centred sites ``q_n = sqrt(variance(n)) * X_n``.

        `variance` maps an index array to ``E[q_n**2]``; ``X_n`` has unit
        variance and law `distribution` (``"bernoulli_pm1"`` or
        ``"uniform"``).
        """
        if distribution not in _UNIT_SAMPLERS:
            raise ValueError(f"unknown distribution {distribution!r}")
        if max_variance is None:
            max_variance = float(np.max(variance(np.arange(4 * SITE_BLOCK))))
        bound = math.sqrt(max_variance) * _UNIT_SAMPLERS[distribution][0]
        return cls("random_centered", bound, variance=variance, distribution=distribution, seed=seed)

    @property
    def is_random(self):
        return self.kind == "random_centered"

    def with_seed(self, seed):
        return replace(self, seed=seed)

    def variances(self, n):
        if self.is_random:
            return np.asarray(self.variance(np.asarray(n)), dtype=float)
        return self.values(n) ** 2

    def _unit_block(self, block, trials):
        draw = _UNIT_SAMPLERS[self.distribution][1]
        out = np.empty((SITE_BLOCK, len(trials)))
        for j, t in enumerate(trials):
            out[:, j] = draw(_streams.generator(self.seed, t, block), SITE_BLOCK)
        return out

    def block(self, b, trials=(0,)):
        """Values of sites ``b*SITE_BLOCK .. (b+1)*SITE_BLOCK - 1``, one column per trial."""
        n = np.arange(b * SITE_BLOCK, (b + 1) * SITE_BLOCK)
        if not self.is_random:
            return np.repeat(self.func(n)[:, None], len(trials), axis=1)
        if self.seed is None:
            raise ValueError("random potential needs a seed")
        scale = np.sqrt(self.variances(n))
        return scale[:, None] * self._unit_block(b, trials)

    def values(self, n, trial=0):
        n = np.asarray(n)
        if not self.is_random:
            return np.asarray(self.func(n), dtype=float)
        flat = n.ravel()
        out = np.empty(flat.shape)
        blocks = flat // SITE_BLOCK
        for b in np.unique(blocks):
            sel = blocks == b
            out[sel] = self.block(int(b), (trial,))[flat[sel] - b * SITE_BLOCK, 0]
        return out.reshape(n.shape)


@dataclass(frozen=True)
class CertificateSequence:
    """Points ``z_n`` of H indexed from `first` (1 by default)."""

    points: np.ndarray
    first: int = 1

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        ensure_upper(pts, "certificate point")
        object.__setattr__(self, "points", pts)

    def __getitem__(self, n):
        return self.points[n - self.first]

    def __len__(self):
        return len(self.points)

    @classmethod
    def constant(cls, z, length, first=1):
        return cls(np.full(length, complex(z)), first)


def free_fixed_point(lam):
    """Fixed point in H of ``z -> -1/(z + lam)``.

    For real ``|lam| < 2`` this is ``-lam/2 + i sqrt(1 - lam**2/4)``. Accepts
    arrays.
    """
    lam = check_lambda(lam)
    lam_arr = np.asarray(lam, dtype=complex)
    real_edge = (lam_arr.imag == 0) & (np.abs(lam_arr.real) >= 2)
    if np.any(real_edge):
        raise OutOfBandError("real lambda with |lambda| >= 2 has no fixed point in H")
    root = np.sqrt(lam_arr * lam_arr - 4 + 0j)
    a = (-lam_arr + root) / 2
    b = (-lam_arr - root) / 2
    z = np.where(a.imag > b.imag, a, b)
    # roots of z**2 + lam z + 1 multiply to 1; take the better-conditioned one
    z = np.where(np.abs(z) < 1, 1 / np.where(a.imag > b.imag, b, a), z)
    z = np.where(lam_arr.imag == 0, -lam_arr.real / 2 + 1j * np.sqrt(np.maximum(1 - lam_arr.real ** 2 / 4, 0)), z)
    return HPoint(complex(z)) if z.ndim == 0 else z


def default_depth(lam):
    """``ceil(8 / Im lam)`` capped at 10**6 (the mixing length is ~1/Im lam)."""
    im = float(np.min(np.imag(lam)))
    if im <= 0:
        raise ValueError("default depth needs Im(lambda) > 0")
    return int(min(math.ceil(8.0 / im), 10 ** 6))


def _fold(pot, lam, depth, start, trials=(0,)):
    """Phi_0 o ... o Phi_depth(start), vectorised over lam and trials."""
    lam = np.asarray(lam, dtype=complex)
    vector = lam.ndim > 0 or len(trials) > 1
    if pot.kind == "zero" and not vector:
        z, lam_c = complex(start), complex(lam)
        for _ in range(depth + 1):
            z = -1.0 / (z + lam_c)
        return z
    shape = np.broadcast_shapes(lam.shape + (1,) if lam.ndim else (1,), (len(trials),))
    z = np.broadcast_to(np.asarray(start, dtype=complex), shape).copy() if np.ndim(start) else np.full(shape, complex(start))
    lam_b = lam[..., None] if lam.ndim else lam
    last_block = depth // SITE_BLOCK
    for b in range(last_block, -1, -1):
        q = pot.block(b, trials)
        top = depth - b * SITE_BLOCK if b == last_block else SITE_BLOCK - 1
        for i in range(top, -1, -1):
            z = -1.0 / (z + lam_b - q[i])
    if not (np.all(np.isfinite(z)) and np.all(z.imag > 0)):
        raise BoundaryUnderflowError("Green function left H during the backward fold")
    if lam.ndim == 0 and len(trials) == 1:
        return complex(z[0])
    if len(trials) == 1:
        return z[..., 0]
    return z if lam.ndim else z.reshape(len(trials))


def green_1d(pot, lam, depth=None, start=1j, trial=0):
    """Approximate ``G_lam(0, 0)`` as ``Phi_0 o Phi_1 o ... o Phi_depth(start)``.

    Parameters
    ----------
    pot : PotentialSeq
    lam : complex or array of complex
        Spectral parameter(s) with Im > 0. Arrays are evaluated in one pass.
    depth : int, optional
        Index of the deepest Mobius step; defaults to :func:`default_depth`.
    start : complex
        Seed placed at site ``depth + 1``.
    trial : int
        Realisation index for random potentials.
    """
    check_lambda(lam, strict=True)
    if depth is None:
        depth = default_depth(lam)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    z = _fold(pot, lam, depth, start, (trial,))
    return HPoint(z) if np.ndim(z) == 0 else z


def composition_sequence(pot, lam, n_max, start=1j):
    """The partial compositions ``w_n = Phi_0 o ... o Phi_n(start)``, n = 0..n_max."""
    check_lambda(lam, strict=True)
    q = pot.values(np.arange(n_max + 1))
    lam = complex(lam)
    # w_n needs its own fold; compose Mobius matrices from the root outward
    out = np.empty(n_max + 1, dtype=complex)
    m = np.eye(2, dtype=complex)
    for n in range(n_max + 1):
        m = m @ np.array([[0.0, -1.0], [1.0, lam - q[n]]], dtype=complex)
        m /= np.max(np.abs(m))
        out[n] = (m[0, 0] * start + m[0, 1]) / (m[1, 0] * start + m[1, 1])
    return out


def certificate_sum(pot, lam, zseq, terms):
    """Partial sums of ``d(Phi_{n+1}(z_{n+1}), z_n)`` and the head distance ``d(z_1, i)``.

    Real ``lam`` is allowed. Returns ``(partial_sums, head_dist)`` where
    ``partial_sums[N-1]`` sums the terms ``n = 1..N``.
    """
    lam = check_lambda(lam)
    if terms < 1:
        raise ValueError("terms must be >= 1")
    n = np.arange(1, terms + 1)
    z_n = np.array([zseq[k] for k in n])
    z_next = np.array([zseq[k + 1] for k in n])
    q_next = pot.values(n + 1)
    images = -1.0 / (z_next + lam - q_next)
    steps = poincare_dist(images, z_n)
    return np.cumsum(steps), poincare_dist(zseq[1], 1j)


def mourre_fixed_points(pot, lam, n_range):
    """Per-site fixed points ``-(lam - q_n)/2 + i sqrt(1 - (lam - q_n)**2 / 4)``.

    `n_range` is an iterable of site indices; the result is indexed by them.
    """
    lam = float(np.real(lam))
    n = np.asarray(list(n_range))
    shift = lam - pot.values(n)
    if np.any(np.abs(shift) >= 2):
        bad = n[np.abs(shift) >= 2][0]
        raise OutOfBandError(f"|lambda - q_n| >= 2 at n = {bad}")
    pts = -shift / 2 + 1j * np.sqrt(1 - shift ** 2 / 4)
    return CertificateSequence(pts, first=int(n[0]))


def expansion_rate(z, q, lam, z_ref=None):
    """Rate of expansion ``(cd^2(Phi z) + 1) / (cd^2(z) + 1)`` of one step."""
    lam = check_lambda(lam)
    if z_ref is None:
        z_ref = free_fixed_point(np.real(lam))
    w = -1.0 / (np.asarray(z, dtype=complex) + lam - q)
    r = (cd_weight(w, z_ref) ** 2 + 1) / (cd_weight(z, z_ref) ** 2 + 1)
    return float(r) if np.ndim(r) == 0 else r


def expansion_envelope(z, lam, q_bound, n_q=201, h=1e-5, z_ref=None):
    """Fit ``mu(z, q) <= A0 + A1 q + A2 q**2`` over ``|q| <= q_bound``.

    ``A0 = mu(z, 0)``, ``A1`` is the central-difference slope at ``q = 0`` and
    ``A2`` is the smallest constant making the bound hold on the q grid.
    Vectorised over `z`.
    """
    z = np.asarray(z, dtype=complex)
    a0 = expansion_rate(z, 0.0, lam, z_ref)
    a1 = (expansion_rate(z, h, lam, z_ref) - expansion_rate(z, -h, lam, z_ref)) / (2 * h)
    qs = np.linspace(-q_bound, q_bound, n_q)
    qs = qs[qs != 0]
    mu = expansion_rate(z[..., None], qs, lam, z_ref)
    a2 = np.max((mu - a0[..., None] - a1[..., None] * qs) / qs ** 2, axis=-1)
    return a0, a1, a2


def calibrate_C0(lam, q_bound, n_x=121, n_y=121):
    """Empirical constant ``C0 = sup_z A2(z)`` over a wide grid of H.

    Also returns the largest ``A0`` seen, which should not exceed 1.
    """
    xs = np.sinh(np.linspace(-6, 6, n_x))
    ys = np.logspace(-6, 4, n_y)
    z = (xs[:, None] + 1j * ys[None, :]).ravel()
    a0, _, a2 = expansion_envelope(z, float(np.real(lam)), q_bound, n_q=41)
    return float(np.max(a2)), float(np.max(a0))


@dataclass
class MomentTable:
    lam: float
    C0: float
    variance_sum: float
    bound: float
    rows: list  # (eps, mean cd^2, standard error)


def l2_moment_experiment(pot, lam, eps_ladder, depth=None, trials=1000, seed=0, variance_terms=100_000):
    """Monte Carlo estimate of ``E[cd^2(G_{lam + i eps}(0, 0))]`` along an eps ladder.

    Every eps uses the same `trials` realisations of the random potential
    (drawn from ``seed``) and starts the fold at the free fixed point, as in
    the moment argument. The reported bound is ``exp(C0 * sum_i E q_i**2)``
    with ``C0`` from :func:`calibrate_C0`.
    """
    lam = float(lam)
    if not -2 < lam < 2:
        raise OutOfBandError("lambda must lie in (-2, 2)")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pot = pot.with_seed(seed) if pot.is_random else pot
    z_ref = complex(free_fixed_point(lam))
    var_sum = float(np.sum(pot.variances(np.arange(variance_terms))))
    c0 = calibrate_C0(lam, max(pot.bound, 1e-12))[0] if pot.bound > 0 else 0.0
    rows = []
    for eps in eps_ladder:
        d = depth if depth is not None else default_depth(lam + 1j * eps)
        g = _fold(pot, lam + 1j * eps, d, z_ref, tuple(range(trials)))
        g = np.atleast_1d(g)
        c2 = cd_weight(g, z_ref) ** 2
        se = float(np.std(c2, ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
        rows.append((float(eps), float(np.mean(c2)), se))
    return MomentTable(lam, c0, var_sum, math.exp(c0 * var_sum), rows)


def density_profile(pot, interval, eps, grid, depth=None):
    """Smoothed spectral density ``Im G_{lam + i eps}(0, 0) / pi`` on a grid.

    The grid includes both interval endpoints.
    """
    c, d = interval
    if not c < d:
        raise ValueError("interval must satisfy c < d")
    if eps <= 0:
        raise ValueError("eps must be positive")
    lams = np.linspace(c, d, grid)
    g = green_1d(pot, lams + 1j * eps, depth)
    return list(zip(lams.tolist(), (np.imag(g) / math.pi).tolist()))


def ac_certificate(pot, interval, eps_ladder, grid, depth=None):
    """``sup_lam |G_{lam + i eps}(0, 0)|`` over a grid, for each eps.

    A sup that stays bounded as eps decreases indicates ac spectrum in the
    interval.
    """
    lams = np.linspace(interval[0], interval[1], grid)
    return [(float(eps), float(np.max(np.abs(green_1d(pot, lams + 1j * eps, depth))))) for eps in eps_ladder]
