import pathlib

import numpy as np
import pytest

from geonorm import assets
from geonorm.groups import PlanarMap
from geonorm.moments import centroid
from geonorm.normalize import canonical_geometry
from geonorm.raster import OutGeometry, Raster, warp

ASSETS_DIR = pathlib.Path(__file__).resolve().parents[1] / "assets"


@pytest.fixture(scope="session")
def blob():
    return assets.blob()


@pytest.fixture(scope="session")
def cross():
    return assets.cross()


@pytest.fixture(scope="session")
def disk():
    return assets.disk()


@pytest.fixture(scope="session")
def gaussian():
    return assets.gaussian()


@pytest.fixture(scope="session")
def ring():
    return assets.ring()


@pytest.fixture(scope="session")
def sphere_blobs():
    return assets.sphere_two_blobs()


@pytest.fixture(scope="session")
def centered_blob(blob):
    return centered(blob)


def centered(r: Raster) -> Raster:
    """Translation-normalized copy on a centered square grid."""
    g = canonical_geometry(r, PlanarMap.identity())
    return warp(r, PlanarMap.translation(centroid(r)), g)


def enlarged(r: Raster, factor: int = 2) -> OutGeometry:
    n_w = factor * (r.width - 1) + 1
    n_h = factor * (r.height - 1) + 1
    return OutGeometry(n_w, n_h, r.pitch,
                       (-r.pitch * (n_w - 1) / 2.0,
                        -r.pitch * (n_h - 1) / 2.0))


def mean_abs_frac(a: Raster, b: Raster) -> float:
    """Mean absolute difference relative to the peak of ``b``."""
    return float(np.abs(a.intensities - b.intensities).mean()
                 / b.intensities.max())


def max_abs_frac(a: Raster, b: Raster) -> float:
    return float(np.abs(a.intensities - b.intensities).max()
                 / b.intensities.max())


def splat_points(points, values, n: int = 257, pitch: float = 1.0) -> Raster:
    """Deposit point masses onto a grid with bilinear (tent) weights.

    The adjoint of bilinear sampling: mass and first moments of the point
    set are preserved exactly, which makes splatted point sets usable as
    quadrature-free oracles for rotated configurations.
    """
    img = np.zeros((n, n))
    org = -pitch * (n - 1) / 2.0
    for (x1, x2), v in zip(points, values):
        u = (x1 - org) / pitch
        w = (x2 - org) / pitch
        j0, i0 = int(np.floor(u)), int(np.floor(w))
        fu, fv = u - j0, w - i0
        for di, dj, wt in ((0, 0, (1 - fu) * (1 - fv)),
                           (0, 1, fu * (1 - fv)),
                           (1, 0, (1 - fu) * fv),
                           (1, 1, fu * fv)):
            if 0 <= i0 + di < n and 0 <= j0 + dj < n:
                img[i0 + di, j0 + dj] += v * wt
    return Raster.from_array(img, pitch)


def angle_distance(a: float, b: float, period: float = 2.0 * np.pi) -> float:
    """Minimal circular distance between two angles modulo ``period``."""
    d = (a - b) % period
    return float(min(d, period - d))


def similarity_fixed_point(n: int = 129, pitch: float = 0.1) -> Raster:
    """An image that already satisfies the similarity constraints.

    Two unequal lobes on the x1 axis, mirror symmetric in x2 (so the phase
    constraint holds exactly with a positive integral and the mirror
    discriminant ties), with amplitudes balancing the centroid analytically
    and the overall size tuned by bisection until the mean log radius
    vanishes on this very grid.
    """
    from geonorm.moments import log_radial_moment_about, radial_moment_about

    a1, amp1, d1 = 0.6, 0.5, 3.2   # small lobe, far on +x1
    a2, amp2 = 0.8, 1.0            # big lobe on -x1
    # Centroid balance: amp sigma^2 d equal on both sides.
    d2 = amp1 * a1 ** 2 * d1 / (amp2 * a2 ** 2)

    def build(s: float) -> Raster:
        ax = pitch * (np.arange(n) - (n - 1) / 2.0)
        x1, x2 = ax[None, :], ax[:, None]
        img = (amp1 * np.exp(-((x1 - d1 * s) ** 2 + x2 ** 2)
                             / (2.0 * (a1 * s) ** 2))
               + amp2 * np.exp(-((x1 + d2 * s) ** 2 + x2 ** 2)
                               / (2.0 * (a2 * s) ** 2)))
        return Raster.from_array(img, pitch)

    def mean_log_radius(s: float) -> float:
        r = build(s)
        return (log_radial_moment_about(r, (0.0, 0.0))
                / radial_moment_about(r, (0.0, 0.0), 0.0))

    lo, hi = 0.2, 1.2
    assert mean_log_radius(lo) < 0.0 < mean_log_radius(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mean_log_radius(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return build(0.5 * (lo + hi))


def affine_fixed_point(n: int = 161, pitch: float = 0.065) -> Raster:
    """An image that already satisfies the affine (whitening) constraints.

    A two-lobe Gaussian mixture on the x1 axis whose covariance is whitened
    in closed form, so the sampled image has centroid 0, unit normalized
    second moments, zero cross moment, and a real positive first-harmonic
    phase integral, all to sampling accuracy (Gaussian sums converge
    super-algebraically).
    """
    a1, amp1, d1 = 0.6, 0.5, 3.2
    a2, amp2 = 0.8, 1.0
    d2 = amp1 * a1 ** 2 * d1 / (amp2 * a2 ** 2)
    w1 = amp1 * a1 ** 2
    w2 = amp2 * a2 ** 2
    c11 = (w1 * (a1 ** 2 + d1 ** 2) + w2 * (a2 ** 2 + d2 ** 2)) / (w1 + w2)
    c22 = (w1 * a1 ** 2 + w2 * a2 ** 2) / (w1 + w2)
    s1, s2 = np.sqrt(c11), np.sqrt(c22)

    ax = pitch * (np.arange(n) - (n - 1) / 2.0)
    x1, x2 = ax[None, :], ax[:, None]

    def lobe(amp, d, a):
        return amp * np.exp(-((x1 - d / s1) ** 2 / (a / s1) ** 2
                              + x2 ** 2 / (a / s2) ** 2) / 2.0)

    img = lobe(amp1, d1, a1) + lobe(amp2, -d2, a2)
    return Raster.from_array(img, pitch)
