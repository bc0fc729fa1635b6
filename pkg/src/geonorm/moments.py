"""Integral functionals of rasters: moments, phase integrals, invariants.

Everything here is a plain quadrature over pixel centers (midpoint rule,
cell area pitch^2).  Centroid-relative quantities use a two-pass scheme:
the centroid is found first, then powers of the offsets are accumulated,
which is numerically stabler than expanding raw moments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateSecondMoments, ZeroMass
from .raster import Raster

# Relative threshold below which the second-moment matrix counts as singular.
_DEGENERATE_REL = 1e-12
_ORIGIN = (0.0, 0.0)


@dataclass(frozen=True)
class CentralMoments:
    """Moments mu[p, q] about the centroid for p + q <= 3."""

    mu: np.ndarray           # (4, 4), entries with p + q > 3 are zero
    centroid: np.ndarray     # (2,)

    def __post_init__(self):
        m = np.asarray(self.mu, dtype=float)
        m.flags.writeable = False
        object.__setattr__(self, "mu", m)
        c = np.asarray(self.centroid, dtype=float)
        c.flags.writeable = False
        object.__setattr__(self, "centroid", c)

    @property
    def mu00(self) -> float:
        return float(self.mu[0, 0])

    @property
    def rms_radius(self) -> float:
        """Root mean square distance of the mass from the centroid."""
        return float(np.sqrt((self.mu[2, 0] + self.mu[0, 2]) / self.mu[0, 0]))

    @property
    def second_moment_matrix(self) -> np.ndarray:
        return np.array([[self.mu[2, 0], self.mu[1, 1]],
                         [self.mu[1, 1], self.mu[0, 2]]])

    # Conventional one-letter aliases for the invariant formulas.
    @property
    def A(self) -> float:
        return float(self.mu[2, 0])

    @property
    def B(self) -> float:
        return float(self.mu[1, 1])

    @property
    def C(self) -> float:
        return float(self.mu[0, 2])

    @property
    def a(self) -> float:
        return float(self.mu[3, 0])

    @property
    def b(self) -> float:
        return float(self.mu[2, 1])

    @property
    def c(self) -> float:
        return float(self.mu[1, 2])

    @property
    def d(self) -> float:
        return float(self.mu[0, 3])


@dataclass(frozen=True)
class AffineInvariants:
    """Dimensionless affine- and contrast-invariant moment functionals."""

    psi1: float
    psi2: float
    psi3: float
    i1: float
    i2: float
    i3: float
    i4: float


def centroid(r: Raster) -> np.ndarray:
    """Mass center of the image in continuous coordinates."""
    s = _kernels.central_moment_sums(
        r.intensities, r.origin[0], r.origin[1], r.pitch, 0.0, 0.0)
    if s[0] <= 0.0:
        raise ZeroMass("image has zero mass")
    return np.array([s[1] / s[0], s[2] / s[0]])


def central_moments(r: Raster) -> CentralMoments:
    """All mu[p, q] with p + q <= 3 about the centroid."""
    c = centroid(r)
    s = _kernels.central_moment_sums(
        r.intensities, r.origin[0], r.origin[1], r.pitch, c[0], c[1])
    area = r.pitch * r.pitch
    mu = np.zeros((4, 4))
    order = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
             (3, 0), (2, 1), (1, 2), (0, 3)]
    for (p, q), v in zip(order, s):
        mu[p, q] = v * area
    return CentralMoments(mu, c)


def _offsets(r: Raster, center) -> tuple[np.ndarray, np.ndarray]:
    dx = r.origin[0] - center[0] + r.pitch * np.arange(r.width)
    dy = r.origin[1] - center[1] + r.pitch * np.arange(r.height)
    return np.broadcast_to(dx[None, :], r.intensities.shape), \
        np.broadcast_to(dy[:, None], r.intensities.shape)


def _check_mass(r: Raster) -> float:
    total = float(r.intensities.sum())
    if total <= 0.0:
        raise ZeroMass("image has zero mass")
    return total


def phase_integral_about(r: Raster, center, n: int, f=None) -> complex:
    """Integral of e^{i n phi} f(rho) I over the image, offsets from ``center``.

    The pixel nearer than pitch/2 to the center is excluded (the phase is
    undefined there).  ``f`` defaults to the identity weight f(rho) = rho.
    """
    _check_mass(r)
    x1, x2 = _offsets(r, center)
    rho = np.hypot(x1, x2)
    keep = rho >= r.pitch / 2.0
    w = rho if f is None else f(rho)
    phi = np.arctan2(x2, x1)
    area = r.pitch * r.pitch
    vals = np.where(keep, w * r.intensities, 0.0)
    re = float(np.sum(vals * np.cos(n * phi)))
    im = float(np.sum(vals * np.sin(n * phi)))
    return complex(re * area, im * area)


def phase_integral(r: Raster, n: int, f=None) -> complex:
    """Phase integral about the coordinate origin.

    Callers wanting the covariant (translation-independent) value should
    center the image first so the origin coincides with the centroid.
    """
    return phase_integral_about(r, _ORIGIN, n, f)


def radial_moment_about(r: Raster, center, mu_exp: float, g=None) -> float:
    """Integral of rho^mu_exp g(phi) I, offsets from ``center``.

    The center pixel is excluded only when ``mu_exp`` is negative (where
    the weight is singular); at the center the angle is taken as 0.
    """
    _check_mass(r)
    x1, x2 = _offsets(r, center)
    rho = np.hypot(x1, x2)
    vals = r.intensities
    if mu_exp < 0:
        keep = rho >= r.pitch / 2.0
        vals = np.where(keep, vals, 0.0)
        rho = np.where(keep, rho, 1.0)
    w = rho ** mu_exp
    if g is not None:
        w = w * g(np.arctan2(x2, x1))
    return float(np.sum(w * vals)) * r.pitch * r.pitch


def radial_moment(r: Raster, mu_exp: float, g=None) -> float:
    """Radial moment about the coordinate origin (center the image first)."""
    return radial_moment_about(r, _ORIGIN, mu_exp, g)


def log_radial_moment_about(r: Raster, center, g=None) -> float:
    """Integral of log(rho) g(phi) I, offsets from ``center``.

    The pixel nearer than pitch/2 to the center is excluded (log is
    singular at the center).
    """
    _check_mass(r)
    x1, x2 = _offsets(r, center)
    rho = np.hypot(x1, x2)
    keep = rho >= r.pitch / 2.0
    w = np.where(keep, np.log(np.where(keep, rho, 1.0)), 0.0)
    if g is not None:
        w = w * g(np.arctan2(x2, x1))
    return float(np.sum(w * r.intensities)) * r.pitch * r.pitch


def log_radial_moment(r: Raster, g=None) -> float:
    """Log-radius moment about the coordinate origin (center the image first)."""
    return log_radial_moment_about(r, _ORIGIN, g)


def affine_invariants(m: CentralMoments) -> AffineInvariants:
    """The three invariant functionals built from moments of order <= 3.

    Raises :class:`DegenerateSecondMoments` when the second-moment matrix
    is singular (mass concentrated on a line), where the normalizing
    denominators vanish.
    """
    A, B, C = m.A, m.B, m.C
    a, b, c, d = m.a, m.b, m.c, m.d
    mu00 = m.mu00
    i1 = A * C - B * B
    scale = ((A + C) / 2.0) ** 2
    if abs(i1) <= _DEGENERATE_REL * scale:
        raise DegenerateSecondMoments(
            "second-moment matrix is singular; invariants are undefined")
    i2 = (a * d - b * c) ** 2 - 4.0 * (a * c - b * b) * (b * d - c * c)
    i3 = A * (b * d - c * c) - B * (a * d - b * c) + C * (a * c - b * b)
    i4 = (a * a * C ** 3
          - 6.0 * a * b * B * C * C
          + 6.0 * a * c * C * (2.0 * B * B - A * C)
          + a * d * (6.0 * A * B * C - 8.0 * B ** 3)
          + 9.0 * b * b * A * C * C
          - 18.0 * b * c * A * B * C
          + 6.0 * b * d * A * (2.0 * B * B - A * C)
          + 9.0 * c * c * A * A * C
          - 6.0 * c * d * A * A * B
          + d * d * A ** 3)
    return AffineInvariants(
        psi1=mu00 ** 2 * i2 / i1 ** 3,
        psi2=mu00 * i3 / i1 ** 2,
        psi3=mu00 * i4 / i1 ** 3,
        i1=i1, i2=i2, i3=i3, i4=i4)


def reflection_functional(m: CentralMoments) -> float:
    """An odd functional under x1 -> -x1: the third moment mu30."""
    return float(m.mu[3, 0])
