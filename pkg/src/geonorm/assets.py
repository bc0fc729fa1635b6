"""Standard synthetic test images.

Each builder is deterministic and returns a float raster with analytically
known structure, so tests can check computed functionals against closed
forms (Gaussian moments, ring radii, point-set phase sums) instead of
recorded outputs.  ``scripts/make_assets.py`` renders these to the
committed files under ``assets/``.
"""

from __future__ import annotations

import math

import numpy as np

from .raster import Raster
from .sphere import SphericalImage


def _grid(n: int, pitch: float) -> tuple[np.ndarray, np.ndarray]:
    ax = pitch * (np.arange(n) - (n - 1) / 2.0)
    return ax[None, :], ax[:, None]


def blob(n: int = 257, pitch: float = 1.0) -> Raster:
    """Smooth, fully asymmetric multi-lobe image; the workhorse test subject.

    Three unequal Gaussian lobes, one off the axis of the other two, leave
    no reflection or rotation symmetry: the first angular harmonic, the
    second-moment matrix, and the third-order functionals (including the
    mirror discriminant) are all robustly nondegenerate.
    """
    s = pitch * (n - 1) / 256.0
    x1, x2 = _grid(n, pitch)

    def lobe(amp, c1, c2, sigma):
        return amp * np.exp(-(((x1 - c1 * s) ** 2 + (x2 - c2 * s) ** 2)
                              / (2.0 * (sigma * s) ** 2)))

    img = (lobe(1.0, -7.0, -4.0, 10.0)
           + lobe(0.65, 10.0, 6.0, 7.0)
           + lobe(0.45, -12.0, 9.0, 5.5))
    return Raster.from_array(img, pitch)


def cross(n: int = 257, arm: int = 40, value: float = 1.0) -> Raster:
    """Four point masses at (+-arm, 0) and (0, +-arm): exact 4-fold symmetry."""
    if n % 2 == 0:
        raise ValueError("cross needs an odd grid so the center is a pixel")
    img = np.zeros((n, n))
    c = n // 2
    img[c, c + arm] = value
    img[c, c - arm] = value
    img[c + arm, c] = value
    img[c - arm, c] = value
    return Raster.from_array(img, 1.0)


def disk(n: int = 257, pitch: float = 1.0, radius: float | None = None
         ) -> Raster:
    """Radially symmetric, doubly reflection-symmetric flat-top bump.

    The profile exp(-(rho/R)^4) is smooth with a fast tail, so quadrature
    anisotropy from the square grid stays near round-off and all odd
    moments and angular harmonics vanish to high accuracy.
    """
    if radius is None:
        radius = 30.0 * pitch * (n - 1) / 256.0
    x1, x2 = _grid(n, pitch)
    rho2 = x1 * x1 + x2 * x2
    return Raster.from_array(np.exp(-(rho2 / radius ** 2) ** 2), pitch)


def gaussian(n: int = 257, pitch: float = 1.0, sigma: float | None = None,
             amplitude: float = 1.0) -> Raster:
    """Centered isotropic Gaussian with analytically known moments."""
    if sigma is None:
        sigma = 18.0 * pitch * (n - 1) / 256.0
    x1, x2 = _grid(n, pitch)
    img = amplitude * np.exp(-(x1 * x1 + x2 * x2) / (2.0 * sigma ** 2))
    return Raster.from_array(img, pitch)


def gaussian_oracle(n: int = 257, pitch: float = 1.0,
                    sigma: float | None = None,
                    amplitude: float = 1.0) -> dict:
    """Closed-form moment values for :func:`gaussian`."""
    if sigma is None:
        sigma = 18.0 * pitch * (n - 1) / 256.0
    mu00 = amplitude * 2.0 * math.pi * sigma ** 2
    return {
        "mu00": mu00,
        "mu20": sigma ** 2 * mu00,
        "mu02": sigma ** 2 * mu00,
        "mu11": 0.0,
        "mean_square_radius": 2.0 * sigma ** 2,
        "sigma": sigma,
    }


def ring(n: int = 257, pitch: float = 1.0, radius: float | None = None,
         width: float | None = None) -> Raster:
    """Thin Gaussian annulus at the given radius, centered at the origin."""
    if radius is None:
        radius = 40.0 * pitch * (n - 1) / 256.0
    if width is None:
        width = radius / 20.0
    x1, x2 = _grid(n, pitch)
    rho = np.hypot(x1, x2)
    return Raster.from_array(
        np.exp(-((rho - radius) ** 2) / (2.0 * width ** 2)), pitch)


def sphere_two_blobs(n_lat: int = 128, n_lon: int = 256) -> SphericalImage:
    """Two unequal von Mises-Fisher style bumps; no special symmetry."""
    img = SphericalImage(n_lat, n_lon, np.zeros((n_lat, n_lon)))
    dirs = img.directions()
    c1 = np.array([0.3, 0.2, 0.93])
    c1 /= np.linalg.norm(c1)
    c2 = np.array([-0.25, 0.55, 0.79])
    c2 /= np.linalg.norm(c2)
    vals = (np.exp(40.0 * (dirs @ c1 - 1.0))
            + 0.6 * np.exp(60.0 * (dirs @ c2 - 1.0)))
    return SphericalImage(n_lat, n_lon, vals)


def sphere_polar_blobs(n_lat: int = 128, n_lon: int = 256,
                       spread: float = 0.06, offset: float = 0.12
                       ) -> SphericalImage:
    """Small-support asymmetric pair near the north pole.

    Used for the flat-limit comparison against the planar normalizers:
    the support is small enough that the gnomonic projection is nearly
    isometric.
    """
    img = SphericalImage(n_lat, n_lon, np.zeros((n_lat, n_lon)))
    dirs = img.directions()
    kappa = 1.0 / spread ** 2

    def bump(theta_c, phi_c, amp):
        c = np.array([math.sin(theta_c) * math.cos(phi_c),
                      math.sin(theta_c) * math.sin(phi_c),
                      math.cos(theta_c)])
        return amp * np.exp(kappa * (dirs @ c - 1.0))

    vals = bump(offset, 0.7, 1.0) + bump(offset * 0.6, 2.9, 0.55)
    return SphericalImage(n_lat, n_lon, vals)
