"""Sampled planar images and their warps under planar maps.

A :class:`Raster` holds a non-negative intensity field sampled on a regular
grid; pixel (i, j) (row, column) has its center at the continuous
coordinate ``origin + pitch * (j, i)``.  Between pixel centers the image is
the bilinear interpolant, and outside their convex hull it is extended by
zero, so every raster defines a total continuous intensity function.

Warping realizes the group action: the warped raster holds, at each output
pixel center x, the sample of the source at ``map(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DenominatorVanishes
from .groups import PlanarMap

_DEN_EPS = 1e-12
_SHIFT_SNAP = 1e-9


@dataclass(frozen=True)
class OutGeometry:
    """Grid on which a warped image is evaluated."""

    width: int
    height: int
    pitch: float
    origin: tuple[float, float]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("geometry must have at least one pixel")
        if not self.pitch > 0:
            raise ValueError("pitch must be positive")

    def coord(self, i: int, j: int) -> np.ndarray:
        """Continuous coordinate of the center of pixel (row i, column j)."""
        return np.array([self.origin[0] + self.pitch * j,
                         self.origin[1] + self.pitch * i])

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """(x1 values per column, x2 values per row)."""
        return (self.origin[0] + self.pitch * np.arange(self.width),
                self.origin[1] + self.pitch * np.arange(self.height))


@dataclass(frozen=True)
class Raster:
    """Immutable sampled image plus its grid geometry."""

    width: int
    height: int
    pitch: float
    origin: tuple[float, float]
    intensities: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.intensities, dtype=float)
        if arr.shape != (self.height, self.width):
            raise ValueError(
                f"intensities shape {arr.shape} does not match geometry "
                f"{(self.height, self.width)}")
        if not np.isfinite(arr).all():
            raise ValueError("intensities must be finite")
        if (arr < 0).any():
            raise ValueError("intensities must be non-negative")
        if self.width < 1 or self.height < 1:
            raise ValueError("raster must have at least one pixel")
        if not self.pitch > 0:
            raise ValueError("pitch must be positive")
        arr.flags.writeable = False
        object.__setattr__(self, "intensities", arr)
        object.__setattr__(self, "origin",
                           (float(self.origin[0]), float(self.origin[1])))

    @staticmethod
    def from_array(arr, pitch: float = 1.0, origin=None) -> "Raster":
        """Wrap a (height, width) array; default origin centers the grid at 0."""
        arr = np.asarray(arr, dtype=float)
        h, w = arr.shape
        if origin is None:
            origin = (-pitch * (w - 1) / 2.0, -pitch * (h - 1) / 2.0)
        return Raster(w, h, pitch, (origin[0], origin[1]), arr)

    @property
    def geometry(self) -> OutGeometry:
        return OutGeometry(self.width, self.height, self.pitch, self.origin)

    def coord(self, i: int, j: int) -> np.ndarray:
        return self.geometry.coord(i, j)

    def scaled(self, factor: float) -> "Raster":
        """Same geometry with intensities multiplied by ``factor``."""
        return Raster(self.width, self.height, self.pitch, self.origin,
                      self.intensities * factor)

    @property
    def peak(self) -> float:
        return float(self.intensities.max())


def sample(r: Raster, x) -> float | np.ndarray:
    """Bilinear sample of the zero-extended image at coordinate(s) x.

    ``x`` may be a single 2-vector or an (..., 2) stack of points.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    vals = _sample_points(r, pts[..., 0], pts[..., 1])
    return float(vals.reshape(-1)[0]) if single else vals


def _sample_points(r: Raster, y1, y2):
    # Point sampling is not a hot path; the NumPy helper is always used.
    from ._kernels import _ref
    return _ref._sample_grid(r.intensities, r.origin[0], r.origin[1],
                             r.pitch, np.asarray(y1, float),
                             np.asarray(y2, float))


def warp(r: Raster, s: PlanarMap, g: OutGeometry | None = None) -> Raster:
    """Resample ``r`` through ``s``: output(x) = sample(r, s(x)).

    Integer-pitch pure translations onto an aligned grid are performed as
    exact pixel shifts (the identity map is the identity on rasters).
    Raises :class:`DenominatorVanishes` when any output pixel center maps
    through a zero projective denominator.
    """
    if g is None:
        g = r.geometry

    if (s.p == 0).all() and (s.G == np.eye(2)).all() and g.pitch == r.pitch:
        off1 = (g.origin[0] + s.t[0] - r.origin[0]) / r.pitch
        off2 = (g.origin[1] + s.t[1] - r.origin[1]) / r.pitch
        k1, k2 = round(off1), round(off2)
        if (abs(off1 - k1) <= _SHIFT_SNAP and abs(off2 - k2) <= _SHIFT_SNAP):
            return _exact_shift(r, g, k1, k2)

    out, min_den = _kernels.warp_bilinear(
        r.intensities, r.origin[0], r.origin[1], r.pitch,
        s.homogeneous(), g.origin[0], g.origin[1], g.pitch,
        g.height, g.width)
    if min_den < _DEN_EPS:
        raise DenominatorVanishes(
            "projective denominator vanishes inside the output grid")
    return Raster(g.width, g.height, g.pitch, g.origin, out)


def _exact_shift(r: Raster, g: OutGeometry, k1: int, k2: int) -> Raster:
    """Copy pixels with an integer column/row offset, zero filling."""
    out = np.zeros((g.height, g.width))
    # Output pixel (i, j) reads source pixel (i + k2, j + k1).
    src_i0 = max(0, k2)
    src_j0 = max(0, k1)
    dst_i0 = max(0, -k2)
    dst_j0 = max(0, -k1)
    ni = min(r.height - src_i0, g.height - dst_i0)
    nj = min(r.width - src_j0, g.width - dst_j0)
    if ni > 0 and nj > 0:
        out[dst_i0:dst_i0 + ni, dst_j0:dst_j0 + nj] = \
            r.intensities[src_i0:src_i0 + ni, src_j0:src_j0 + nj]
    return Raster(g.width, g.height, g.pitch, g.origin, out)


def mass(r: Raster) -> float:
    """Discrete integral of the intensity: pitch^2 times the sample sum."""
    return float(r.pitch * r.pitch * r.intensities.sum())
