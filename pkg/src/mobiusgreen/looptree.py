"""Binary trees with loops added inside each sphere.

On the regular loop tree sphere ``n`` (``N = 2**n`` vertices) carries an
N-cycle of weight ``gamma``. Its Green blocks are circulant and are
diagonalised by the discrete Fourier transform, so the Siegel recursion
becomes a recursion for the symbols ``f^{(n)}_k``. On the mean-field loop
tree each sphere carries the kernel ``gamma 2**-n`` on all pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominatorError, OutOfBandError
from .halfplane import HPoint, check_lambda, ensure_upper


def _check_pow2(N):
    if N < 1 or N & (N - 1):
        raise ValueError(f"length {N} is not a power of two")


def fft_symbol(first_row):
    """Eigenvalues ``f_j = sum_l z_l exp(2 pi i l j / N)`` of a circulant.

    The circulant ``Z[a, b] = first_row[(b - a) mod N]`` satisfies
    ``U* Z U = diag(f)`` with ``U[l, j] = exp(2 pi i l j / N) / sqrt(N)``.
    """
    first_row = np.asarray(first_row, dtype=complex)
    _check_pow2(first_row.size)
    return first_row.size * np.fft.ifft(first_row)


def inverse_symbol(f):
    """First row of the circulant with symbol `f`."""
    f = np.asarray(f, dtype=complex)
    _check_pow2(f.size)
    return np.fft.fft(f) / f.size


@dataclass(frozen=True)
class CirculantSpectrum:
    """Symbol ``f^{(n)}`` of a level-n circulant Green block (length ``2**n``)."""

    n: int
    f: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=complex)
        if f.shape != (2 ** self.n,):
            raise ValueError(f"level {self.n} needs {2 ** self.n} entries")
        ensure_upper(f, "circulant symbol")
        object.__setattr__(self, "f", f)

    def theta(self):
        """Angles ``2 pi k / N`` of the entries."""
        return 2 * np.pi * np.arange(self.f.size) / self.f.size

    def symmetry_defect(self):
        """``max_k |f_{N/2 - k} - f_{N/2 + k}|`` (zero for real-symmetric blocks)."""
        N = self.f.size
        if N == 1:
            return 0.0
        k = np.arange(N)
        return float(np.max(np.abs(self.f[(N // 2 - k) % N] - self.f[(N // 2 + k) % N])))

    @classmethod
    def constant(cls, n, z):
        return cls(n, np.full(2 ** n, complex(z)))


def loop_recursion_step(f_next, gamma, lam):
    """Symbol at level n from the symbol at level n + 1.

    With ``N = 2**n`` and ``k = 0..N-1``::

        f_k = -1 / (2 cos(pi k / 2N)**2 g_k + 2 sin(pi k / 2N)**2 g_{k+N}
                    + 2 gamma cos(2 pi k / N) + lam)

    where ``g = f_next.f`` has length ``2N``: the level-(n+1) symbol is read
    at the two angles that fold onto angle ``2 pi k / N``.
    """
    lam = check_lambda(lam, strict=True)
    g = f_next.f
    N = g.size // 2
    if N < 1:
        raise ValueError("cannot step below level 0")
    k = np.arange(N)
    phi = np.pi * k / (2 * N)
    denom = 2 * np.cos(phi) ** 2 * g[:N] + 2 * np.sin(phi) ** 2 * g[N:] + 2 * gamma * np.cos(2 * np.pi * k / N) + lam
    if np.any(denom == 0):
        raise DegenerateDenominatorError("loop recursion denominator vanished")
    return CirculantSpectrum(f_next.n - 1, -1.0 / denom)


def loop_spectra(gamma, lam, levels, seed=1j):
    """All symbols ``f^{(levels)}, ..., f^{(0)}``; the deepest is the constant `seed`."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    spec = CirculantSpectrum.constant(levels, seed)
    out = [spec]
    for _ in range(levels):
        spec = loop_recursion_step(spec, gamma, lam)
        out.append(spec)
    return out


def loop_green_root(gamma, lam, levels, seed=1j):
    """``f^{(0)}_0``, approximately ``G_lam(0, 0)`` of the regular loop tree.

    Level `levels` is seeded with the constant symbol `seed`, which equals a
    seed ``seed * I`` for the Green block of that sphere.
    """
    return HPoint(complex(loop_spectra(gamma, lam, levels, seed)[-1].f[0]))


def theta_zero_channel(gamma, lam, depth, start=1j):
    """The closed ``k = 0`` chain ``f <- -1/(2 f + 2 gamma + lam)`` folded `depth` times."""
    lam = check_lambda(lam, strict=True)
    z = complex(start)
    shift = 2 * gamma + lam
    for _ in range(depth):
        z = -1.0 / (2 * z + shift)
    return HPoint(z)


def theta_zero_fixed_point(gamma, lam):
    """Fixed point in H of ``w -> -1/(2 w + 2 gamma + lam)``.

    For real ``mu = 2 gamma + lam`` with ``|mu| < 2 sqrt(2)`` this is
    ``-mu/4 + (i/4) sqrt(8 - mu**2)``.
    """
    lam = check_lambda(lam)
    mu = 2 * gamma + lam
    if mu.imag == 0:
        if abs(mu.real) >= 2 * math.sqrt(2):
            raise OutOfBandError("|2 gamma + lambda| >= 2 sqrt(2): no fixed point in H")
        return HPoint(-mu.real / 4, math.sqrt(8 - mu.real ** 2) / 4)
    r = np.sqrt(mu * mu - 8 + 0j)
    a, b = (-mu + r) / 4, (-mu - r) / 4
    return HPoint(a if a.imag > b.imag else b)


def theta_zero_window(gamma):
    """Real ``lam`` for which the k = 0 channel has a fixed point in H."""
    s = 2 * math.sqrt(2)
    return (-2 * gamma - s, -2 * gamma + s)


def variational_energy_check(gamma, n):
    """``<phi_n, D phi_n>`` for the normalised uniform state on sphere n of the regular loop tree.

    Computed from the explicit cycle adjacency, not from the symbol.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    from .siegelgraph import circulant_cycle

    N = 2 ** n
    phi = np.full(N, 1 / math.sqrt(N))
    return float(phi @ circulant_cycle(N, gamma) @ phi)


def meanfield_spectrum(gamma):
    """The interval union ``[-2 sqrt 2 + gamma, 2 sqrt 2 + gamma]`` and ``[-2 sqrt 2, 2 sqrt 2]``."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    s = 2 * math.sqrt(2)
    return ((-s + gamma, s + gamma), (-s, s))


def in_union(values, intervals, margin=0.0):
    values = np.asarray(values)
    ok = np.zeros(values.shape, dtype=bool)
    for lo, hi in intervals:
        ok |= (values >= lo - margin) & (values <= hi + margin)
    return ok


def meanfield_truncation_check(gamma, depth, margin=0.15, diagonal=True):
    """Eigenvalues of the adjacency of the truncated mean-field loop tree against the interval union.

    Returns ``(eigenvalues, all_inside, top_gap)`` where ``top_gap`` is the
    distance of the largest eigenvalue from ``2 sqrt 2 + gamma``.
    """
    from . import oracle

    H = oracle.build_truncation({"model": "meanfield_loop_tree", "gamma": gamma, "diagonal": diagonal}, depth)
    # eigenvalues of the adjacency are those of -H at zero potential
    ev = np.sort(-oracle.eig_spectrum(H))
    inside = bool(np.all(in_union(ev, meanfield_spectrum(gamma), margin)))
    return ev, inside, float(abs(ev[-1] - (2 * math.sqrt(2) + gamma)))
