"""Geometry of the upper half-plane.

Poincare distance, the scalar Mobius step ``z -> -1/(z + lam - q)``, the
contraction diagnostics that go with it, and the ``cd`` weight
``|z - z_ref|**2 / Im z``.

All functions accept Python complex numbers, :class:`HPoint` instances or
numpy arrays and broadcast over arrays.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import BoundaryUnderflowError, DegenerateDenominatorError

#: Smallest imaginary part accepted for a point of H.
IM_FLOOR = 1e-300


class HPoint(complex):
    """A complex number with strictly positive, finite imaginary part."""

    def __new__(cls, re, im=None):
        z = complex(re) if im is None else complex(re, im)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"HPoint must be finite, got {z!r}")
        if z.imag <= IM_FLOOR:
            raise BoundaryUnderflowError(f"Im must be > {IM_FLOOR:g}, got {z.imag!r}")
        return super().__new__(cls, z.real, z.imag)

    @property
    def re(self):
        return self.real

    @property
    def im(self):
        return self.imag

    def __repr__(self):
        return f"HPoint({self.real!r}, {self.imag!r})"


def check_lambda(lam, strict=False):
    """Validate a spectral parameter; ``strict`` requires Im(lam) > 0."""
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam.imag < 0):
        raise ValueError("spectral parameter must have Im(lambda) >= 0")
    if strict and np.any(lam.imag <= 0):
        raise ValueError("this operation requires Im(lambda) > 0")
    return lam if lam.ndim else complex(lam)


def _as_complex(z):
    if isinstance(z, np.ndarray):
        return z.astype(complex, copy=False)
    if isinstance(z, (list, tuple)):
        return np.asarray(z, dtype=complex)
    return complex(z)


def ensure_upper(z, what="point"):
    """Raise :class:`BoundaryUnderflowError` unless every entry of `z` is in H."""
    im = np.imag(z)
    if np.any(~np.isfinite(z)):
        raise BoundaryUnderflowError(f"{what} is not finite")
    if np.any(im <= IM_FLOOR):
        raise BoundaryUnderflowError(f"{what} left the upper half-plane (min Im = {np.min(im):.3g})")
    return z


def _wrap(z):
    if isinstance(z, np.ndarray) and z.ndim:
        return z
    return HPoint(complex(z))


def poincare_dist(z1, z2):
    """Hyperbolic distance on H.

    Evaluated as ``log(1 + t + sqrt(t**2 + 2t))`` with
    ``t = |z1 - z2|**2 / (2 Im z1 Im z2)``, which equals ``arccosh(1 + t)``
    without the cancellation near 0.
    """
    z1 = _as_complex(z1)
    z2 = _as_complex(z2)
    t = np.abs(z1 - z2) ** 2 / (2.0 * np.imag(z1) * np.imag(z2))
    d = np.log1p(t + np.sqrt(t * t + 2.0 * t))
    return float(d) if np.ndim(d) == 0 else d


def mobius_step(z, q, lam):
    """Apply ``z -> -1/(z + lam - q)``.

    For Im(lam) > 0 the image lies in the disk ``|w| < 1/Im(lam)``.
    """
    lam = check_lambda(lam)
    denom = _as_complex(z) + lam - q
    if np.any(denom == 0):
        raise DegenerateDenominatorError("z + lam - q vanished")
    w = -1.0 / denom
    ensure_upper(w, "Mobius image")
    return _wrap(w)


def contraction_factor(C, im_lambda):
    if C <= 0 or im_lambda <= 0:
        raise ValueError("contraction_factor needs C > 0 and im_lambda > 0")
    return C / (C + im_lambda)


def contraction_ratio(q, lam, z1, z2):
    """Ratio ``d(Phi z1, Phi z2) / d(z1, z2)`` for one Mobius step."""
    d0 = poincare_dist(z1, z2)
    if np.any(np.asarray(d0) == 0):
        raise ZeroDivisionError("contraction ratio undefined for z1 == z2")
    return poincare_dist(mobius_step(z1, q, lam), mobius_step(z2, q, lam)) / d0


def cd_weight(z, z_ref):
    """``|z - z_ref|**2 / Im z``; vanishes exactly at ``z_ref``."""
    z = _as_complex(z)
    w = np.abs(z - z_ref) ** 2 / np.imag(z)
    return float(w) if np.ndim(w) == 0 else w


def two_step_disk_radius(q_bound, lam, samples):
    """Sampled hyperbolic disk containing ``Phi_{n-1} o Phi_n(H)``.

    The enclosure is empirical, not certified: `samples` points spread over
    H (log-spaced heights, wide real range) are pushed through two Mobius
    steps for every pair of potentials on a grid of ``[-q_bound, q_bound]``.
    Returns ``(center, radius)``; every sampled image lies within `radius`
    of `center`.
    """
    lam = check_lambda(lam)
    if lam.imag <= 0:
        raise ValueError("two_step_disk_radius requires Im(lambda) > 0")
    if q_bound < 0 or samples < 1:
        raise ValueError("need q_bound >= 0 and samples >= 1")
    side = max(1, int(math.isqrt(int(samples))))
    xs = np.concatenate([[0.0], np.sinh(np.linspace(-14.0, 14.0, side - 1))]) if side > 1 else np.zeros(1)
    ys = np.logspace(-8, 8, side)
    z = (xs[:, None] + 1j * ys[None, :]).ravel()
    qs = np.linspace(-q_bound, q_bound, 21) if q_bound > 0 else np.zeros(1)

    inner = -1.0 / (z[None, :] + lam - qs[:, None])
    images = -1.0 / (inner[None, :, :] + lam - qs[:, None, None])
    images = images.ravel()
    ensure_upper(images, "two-step image")

    # center: hyperbolic midpoint of the extreme heights at the mean abscissa,
    # refined over a few candidates
    ylo, yhi = images.imag.min(), images.imag.max()
    candidates = [complex(images.real.mean(), math.sqrt(ylo * yhi))]
    candidates += list(images[np.argsort(images.imag)[[0, -1]]])
    best = None
    for c in candidates:
        r = float(np.max(poincare_dist(c, images)))
        if best is None or r < best[1]:
            best = (c, r)
    return HPoint(best[0]), best[1]
