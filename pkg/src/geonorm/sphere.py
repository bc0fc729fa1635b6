"""Images on the sphere and their normalization under 3D rotations.

A :class:`SphericalImage` samples intensities at cell centers of a regular
colatitude/longitude grid: cell (i, j) sits at colatitude pi (i + 1/2) /
n_lat and longitude 2 pi j / n_lon.  Quadrature uses cell-center sums with
sin(colatitude) area weights, mirroring the planar midpoint-rule choice.

Normalization runs in two steps: rotate the spherical center of mass to the
north pole, then fix the remaining azimuth with the same phase-constraint
machinery the planar rotation normalizer uses, with the colatitude playing
the role of the planar radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MalformedHeader, UndefinedDirection

_SNAP = 1e-9
_POLE_ALIGN_EPS = 1e-12


@dataclass(frozen=True)
class SphericalImage:
    """Non-negative intensities on a colatitude/longitude grid."""

    n_lat: int
    n_lon: int
    intensities: np.ndarray
    radius: float = 1.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.intensities, dtype=float)
        if arr.shape != (self.n_lat, self.n_lon):
            raise ValueError("intensities shape does not match the grid")
        if not np.isfinite(arr).all() or (arr < 0).any():
            raise ValueError("intensities must be finite and non-negative")
        if self.n_lat < 2 or self.n_lon < 4:
            raise ValueError("grid must be at least 2 x 4")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        arr.flags.writeable = False
        object.__setattr__(self, "intensities", arr)

    @property
    def colatitudes(self) -> np.ndarray:
        return math.pi * (np.arange(self.n_lat) + 0.5) / self.n_lat

    @property
    def longitudes(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_lon) / self.n_lon

    @property
    def area_weights(self) -> np.ndarray:
        """Per-row solid-angle cell areas sin(theta) dtheta dphi."""
        dtheta = math.pi / self.n_lat
        dphi = 2.0 * math.pi / self.n_lon
        return np.sin(self.colatitudes) * dtheta * dphi

    def directions(self) -> np.ndarray:
        """(n_lat, n_lon, 3) outward unit normals at the cell centers."""
        theta = self.colatitudes[:, None]
        phi = self.longitudes[None, :]
        st = np.sin(theta)
        shape = (self.n_lat, self.n_lon)
        return np.stack([np.broadcast_to(st * np.cos(phi), shape),
                         np.broadcast_to(st * np.sin(phi), shape),
                         np.broadcast_to(np.cos(theta) * np.ones_like(phi),
                                         shape)], axis=-1)

    @property
    def peak(self) -> float:
        return float(self.intensities.max())


@dataclass(frozen=True)
class Rotation3:
    """A proper 3D rotation, validated to be orthogonal with det +1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=float).reshape(3, 3)
        if np.abs(m @ m.T - np.eye(3)).max() > 1e-12:
            raise ValueError("matrix is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > 1e-12:
            raise ValueError("matrix is not a proper rotation")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @staticmethod
    def identity() -> "Rotation3":
        return Rotation3(np.eye(3))

    @staticmethod
    def about_axis(axis, angle: float) -> "Rotation3":
        """Rodrigues rotation about a (not necessarily unit) axis."""
        a = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(a)
        if norm == 0.0:
            raise ValueError("axis must be nonzero")
        a = a / norm
        k = np.array([[0.0, -a[2], a[1]],
                      [a[2], 0.0, -a[0]],
                      [-a[1], a[0], 0.0]])
        m = np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)
        # Re-orthogonalize to keep the validation threshold comfortable.
        u, _, vt = np.linalg.svd(m)
        return Rotation3(u @ vt)

    @staticmethod
    def about_z(angle: float) -> "Rotation3":
        c, s = math.cos(angle), math.sin(angle)
        return Rotation3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def __matmul__(self, other: "Rotation3") -> "Rotation3":
        return Rotation3(self.matrix @ other.matrix)


def sphere_center_of_mass(img: SphericalImage,
                          eps_dir: float = 1e-6) -> np.ndarray:
    """Unit vector toward the intensity-weighted mean direction.

    Raises :class:`UndefinedDirection` when the weighted directions cancel
    (e.g. a uniform image or exact antipodal balance).
    """
    w = img.intensities * img.area_weights[:, None]
    total = float(w.sum())
    if total <= 0.0:
        raise UndefinedDirection("image has zero mass")
    theta = img.colatitudes[:, None]
    phi = img.longitudes[None, :]
    st = np.sin(theta)
    v = np.array([float((w * st * np.cos(phi)).sum()),
                  float((w * st * np.sin(phi)).sum()),
                  float((w * np.cos(theta)).sum())])
    norm = float(np.linalg.norm(v))
    if norm <= eps_dir * total:
        raise UndefinedDirection("center-of-mass direction cancels out")
    return v / norm


def rotate_sphere(img: SphericalImage, rot: Rotation3) -> SphericalImage:
    """Group action by resampling: output(n) = input(rot . n).

    Bilinear in (colatitude, longitude) with longitude wraparound; beyond
    the first or last ring of cell centers the nearest ring is used.
    Grid-aligned rotations (identity, polar-axis turns by multiples of the
    longitude step) reproduce stored samples exactly.
    """
    if np.array_equal(rot.matrix, np.eye(3)):
        return img
    theta = img.colatitudes[:, None]
    phi = img.longitudes[None, :]
    st = np.sin(theta)
    n = np.stack([np.broadcast_to(st * np.cos(phi), (img.n_lat, img.n_lon)),
                  np.broadcast_to(st * np.sin(phi), (img.n_lat, img.n_lon)),
                  np.broadcast_to(np.cos(theta), (img.n_lat, img.n_lon))],
                 axis=-1)
    m = n @ rot.matrix.T
    theta_s = np.arccos(np.clip(m[..., 2], -1.0, 1.0))
    phi_s = np.mod(np.arctan2(m[..., 1], m[..., 0]), 2.0 * math.pi)

    fi = theta_s / (math.pi / img.n_lat) - 0.5
    fj = phi_s / (2.0 * math.pi / img.n_lon)
    fi = np.where(np.abs(fi - np.round(fi)) < _SNAP, np.round(fi), fi)
    fj = np.where(np.abs(fj - np.round(fj)) < _SNAP, np.round(fj), fj)

    fi = np.clip(fi, 0.0, img.n_lat - 1.0)
    i0 = np.floor(fi).astype(np.int64)
    i1 = np.minimum(i0 + 1, img.n_lat - 1)
    fv = fi - i0
    j0 = np.floor(fj).astype(np.int64) % img.n_lon
    j1 = (j0 + 1) % img.n_lon
    fu = fj - np.floor(fj)

    v = img.intensities
    out = ((1 - fu) * (1 - fv) * v[i0, j0] + fu * (1 - fv) * v[i0, j1]
           + (1 - fu) * fv * v[i1, j0] + fu * fv * v[i1, j1])
    return SphericalImage(img.n_lat, img.n_lon, out, img.radius)


def _azimuthal_phase(img: SphericalImage, n: int) -> complex:
    """Integral of e^{i n phi} sin^3(colat) I over the sphere.

    The cubic weight vanishes at both poles (where longitude is undefined)
    and, unlike sin(colat) whose first harmonic equals the transverse
    center-of-mass components that the pole-alignment step zeroes, stays
    generically nonzero on pole-centered images.  Near the pole it matches
    the cubic radial weight of the planar rotation normalizer.
    """
    w = img.intensities * img.area_weights[:, None]
    f = np.sin(img.colatitudes)[:, None] ** 3
    phi = img.longitudes[None, :]
    re = float((w * f * np.cos(n * phi)).sum())
    im = float((w * f * np.sin(n * phi)).sum())
    return complex(re, im)


def _pole_alignment(c) -> Rotation3:
    """Minimal rotation taking the north pole to direction ``c``."""
    z = np.array([0.0, 0.0, 1.0])
    dot = float(np.clip(np.dot(z, c), -1.0, 1.0))
    if dot >= 1.0 - _POLE_ALIGN_EPS:
        return Rotation3.identity()
    if dot <= -1.0 + _POLE_ALIGN_EPS:
        return Rotation3.about_axis([1.0, 0.0, 0.0], math.pi)
    axis = np.cross(z, c)
    return Rotation3.about_axis(axis, math.acos(dot))


def normalize_sphere(img: SphericalImage, cfg=None, *, n_max: int = 8,
                     sym_threshold: float = 1e-3
                     ) -> tuple[Rotation3, SphericalImage, int | None]:
    """Bring the center of mass to the pole, then zero the azimuthal phase.

    Returns ``(rotation, normalized, symmetry_order)``; the normalized
    image is one resample of the input through the composed rotation.
    ``symmetry_order`` is None when no azimuthal harmonic up to ``n_max``
    rises above threshold (azimuthally symmetric image, already canonical
    after the pole step).
    """
    del cfg
    c = sphere_center_of_mass(img)
    r1 = _pole_alignment(c)
    img1 = rotate_sphere(img, r1)

    w = img1.intensities * img1.area_weights[:, None]
    scale = float((w * np.sin(img1.colatitudes)[:, None] ** 3).sum())
    order = None
    alpha = 0.0
    for n in range(1, n_max + 1):
        z = _azimuthal_phase(img1, n)
        if abs(z) > sym_threshold * scale:
            order = n
            alpha = (math.atan2(z.imag, z.real)) % (2.0 * math.pi) / n
            break
    total = r1 @ Rotation3.about_z(alpha)
    normalized = rotate_sphere(img, total)
    return total, normalized, order


# ---------------------------------------------------------------- file IO ---

def write_spherical(img: SphericalImage, path) -> None:
    """Plain-text grid with a 3-line header (n_lat, n_lon, radius)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{img.n_lat}\n{img.n_lon}\n{img.radius!r}\n")
        for row in img.intensities:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_spherical(path) -> SphericalImage:
    """Read the plain-text spherical grid format."""
    with open(path, "r", encoding="ascii") as fh:
        try:
            n_lat = int(fh.readline())
            n_lon = int(fh.readline())
            radius = float(fh.readline())
        except ValueError as exc:
            raise MalformedHeader(f"bad spherical header in {path}") from exc
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (n_lat, n_lon):
        raise MalformedHeader(
            f"grid {data.shape} does not match header {(n_lat, n_lon)}")
    return SphericalImage(n_lat, n_lon, data, radius)
