"""Planar viewing-transformation algebra.

A :class:`PlanarMap` is one element of the planar projective hierarchy
(translation, rotation, scaling, lower-triangular linear, general linear,
affine, projective, axis reflection).  Every kind is stored on a common
parameterization

    x' = (G.x + t) / (1 + p.x)

so composition and inversion reduce to exact 3x3 homogeneous-matrix algebra
with the lower-right entry normalized to 1.  Specialized kinds keep their
tag so callers can recover e.g. a rotation angle, and composition returns
the tightest kind that is guaranteed to contain the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DenominatorVanishes, NegativeDeterminant, Singular

# Kind tags, ordered roughly by generality.
TRANSLATION = "translation"
ROTATION = "rotation"
SCALING = "scaling"
REFLECTION = "reflection"
LOWER_TRIANGULAR = "lower"
LINEAR = "linear"
AFFINE = "affine"
PROJECTIVE = "projective"

_EPS_CHART = 1e-12


def _ro(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=float))
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PlanarMap:
    """A planar map x -> (G.x + t)/(1 + p.x) tagged with its subgroup kind."""

    kind: str
    G: np.ndarray
    t: np.ndarray
    p: np.ndarray
    axis: int | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "G", _ro(np.reshape(self.G, (2, 2))))
        object.__setattr__(self, "t", _ro(np.reshape(self.t, (2,))))
        object.__setattr__(self, "p", _ro(np.reshape(self.p, (2,))))
        if not (np.isfinite(self.G).all() and np.isfinite(self.t).all()
                and np.isfinite(self.p).all()):
            raise ValueError("map parameters must be finite")
        d = self.det
        if d == 0.0:
            raise Singular("linear part has zero determinant")
        if self.kind == SCALING and not (self.G[0, 0] > 0):
            raise ValueError("scaling factor must be positive")
        if self.kind == LOWER_TRIANGULAR and self.G[0, 1] != 0.0:
            raise ValueError("lower-triangular maps require G[0,1] == 0")

    # ---- constructors ------------------------------------------------

    @staticmethod
    def identity() -> "PlanarMap":
        return PlanarMap(TRANSLATION, np.eye(2), np.zeros(2), np.zeros(2))

    @staticmethod
    def translation(t) -> "PlanarMap":
        return PlanarMap(TRANSLATION, np.eye(2), t, np.zeros(2))

    @staticmethod
    def rotation(theta: float) -> "PlanarMap":
        c, s = math.cos(theta), math.sin(theta)
        return PlanarMap(ROTATION, [[c, -s], [s, c]], np.zeros(2), np.zeros(2))

    @staticmethod
    def scaling(lam: float) -> "PlanarMap":
        return PlanarMap(SCALING, [[lam, 0.0], [0.0, lam]],
                         np.zeros(2), np.zeros(2))

    @staticmethod
    def reflection(axis: int) -> "PlanarMap":
        """Reflection negating coordinate ``axis`` (1 or 2)."""
        if axis not in (1, 2):
            raise ValueError("axis must be 1 or 2")
        g = np.diag([-1.0, 1.0]) if axis == 1 else np.diag([1.0, -1.0])
        return PlanarMap(REFLECTION, g, np.zeros(2), np.zeros(2), axis=axis)

    @staticmethod
    def lower_triangular(g) -> "PlanarMap":
        return PlanarMap(LOWER_TRIANGULAR, g, np.zeros(2), np.zeros(2))

    @staticmethod
    def linear(G) -> "PlanarMap":
        return PlanarMap(LINEAR, G, np.zeros(2), np.zeros(2))

    @staticmethod
    def affine(G, t) -> "PlanarMap":
        return PlanarMap(AFFINE, G, t, np.zeros(2))

    @staticmethod
    def projective(G, t, p) -> "PlanarMap":
        return PlanarMap(PROJECTIVE, G, t, p)

    @staticmethod
    def restricted_projective(p) -> "PlanarMap":
        """Pure perspective map x / (1 + p.x)."""
        return PlanarMap(PROJECTIVE, np.eye(2), np.zeros(2), p)

    # ---- basic queries -----------------------------------------------

    @property
    def det(self) -> float:
        g = self.G
        return g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]

    @property
    def theta(self) -> float:
        """Rotation angle for rotation-kind maps."""
        return math.atan2(self.G[1, 0], self.G[0, 0])

    @property
    def scale(self) -> float:
        """Scale factor for scaling-kind maps."""
        return float(self.G[0, 0])

    def is_identity(self, tol: float = 0.0) -> bool:
        return (np.abs(self.G - np.eye(2)).max() <= tol
                and np.abs(self.t).max() <= tol
                and np.abs(self.p).max() <= tol)

    def homogeneous(self) -> np.ndarray:
        """3x3 representative with lower-right entry 1."""
        h = np.empty((3, 3))
        h[:2, :2] = self.G
        h[:2, 2] = self.t
        h[2, :2] = self.p
        h[2, 2] = 1.0
        return h

    # ---- operator sugar ----------------------------------------------

    def __call__(self, x):
        return apply_map(self, x)

    def __matmul__(self, other: "PlanarMap") -> "PlanarMap":
        return compose(self, other)


# ---------------------------------------------------------------- apply ---

def apply_map(s: PlanarMap, x):
    """Apply the coordinate map to one point (2,) or stacked points (..., 2).

    Raises :class:`DenominatorVanishes` when 1 + p.x vanishes at any input.
    """
    x = np.asarray(x, dtype=float)
    y = x @ s.G.T + s.t
    if s.p[0] == 0.0 and s.p[1] == 0.0:
        return y
    den = 1.0 + x @ s.p
    if np.any(np.abs(den) < _EPS_CHART):
        raise DenominatorVanishes("projective denominator vanishes")
    return y / den[..., None] if y.ndim > 1 else y / den


def _classify(h: np.ndarray, kind_hint: str) -> PlanarMap:
    """Wrap a normalized homogeneous matrix with the hinted kind tag."""
    return PlanarMap(kind_hint, h[:2, :2], h[:2, 2], h[2, :2])


def _linear_join(k1: str, k2: str) -> str:
    """Tightest linear-part kind containing the product of two linear kinds."""
    if k1 == k2:
        # A product of two axis reflections is a rotation (by 0 or pi).
        return ROTATION if k1 == REFLECTION else k1
    pair = {k1, k2}
    if pair <= {SCALING, REFLECTION, LOWER_TRIANGULAR}:
        return LOWER_TRIANGULAR
    return LINEAR


def _join_kinds(s2: PlanarMap, s1: PlanarMap) -> str:
    kinds = (s2.kind, s1.kind)
    if PROJECTIVE in kinds:
        return PROJECTIVE
    has_t = TRANSLATION in kinds or AFFINE in kinds
    lin_kinds = [k for k in kinds if k not in (TRANSLATION, AFFINE)]
    if not lin_kinds:
        return TRANSLATION if AFFINE not in kinds else AFFINE
    if len(lin_kinds) == 1:
        lin = lin_kinds[0]
    else:
        lin = _linear_join(*lin_kinds)
    return AFFINE if has_t or AFFINE in kinds else lin


def compose(s2: PlanarMap, s1: PlanarMap) -> PlanarMap:
    """Closed form of the map x -> s2(s1(x))."""
    if s1.is_identity():
        return s2
    if s2.is_identity():
        return s1
    h = s2.homogeneous() @ s1.homogeneous()
    w = h[2, 2]
    if abs(w) < _EPS_CHART * max(1.0, np.abs(h).max()):
        raise Singular("composition leaves the 1 + p.x chart")
    if w != 1.0:
        h = h / w
    return _classify(h, _join_kinds(s2, s1))


def invert(s: PlanarMap) -> PlanarMap:
    """Inverse map; compose(s, invert(s)) is the identity."""
    d = s.det
    if d == 0.0 or not np.isfinite(d):
        raise Singular("map is not invertible")
    if s.p[0] == 0.0 and s.p[1] == 0.0:
        # Affine closed form keeps p exactly zero.
        ginv = np.array([[s.G[1, 1], -s.G[0, 1]],
                         [-s.G[1, 0], s.G[0, 0]]]) / d
        if s.kind == TRANSLATION:
            return PlanarMap(TRANSLATION, np.eye(2), -s.t, np.zeros(2))
        return PlanarMap(s.kind, ginv, -(ginv @ s.t), np.zeros(2),
                         axis=s.axis)
    h = s.homogeneous()
    hinv = np.linalg.inv(h)
    w = hinv[2, 2]
    if abs(w) < _EPS_CHART * max(1.0, np.abs(hinv).max()):
        raise Singular("inverse leaves the 1 + p.x chart")
    return _classify(hinv / w, s.kind)


# ------------------------------------------------------- factorizations ---

def factor_linear(G) -> tuple[PlanarMap, PlanarMap]:
    """Split a nonsingular 2x2 map as g.R with g lower-triangular, g11 > 0.

    R is a proper rotation; for det G < 0 the reflection ends up as a
    negative g22.  The decomposition is unique under the g11 > 0 convention.
    """
    G = np.asarray(G, dtype=float).reshape(2, 2)
    d = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    if d == 0.0 or not np.isfinite(d):
        raise Singular("matrix is singular")
    g11 = math.hypot(G[0, 0], G[0, 1])
    theta = math.atan2(-G[0, 1], G[0, 0])
    c, s = math.cos(theta), math.sin(theta)
    # g = G . R^T
    g21 = G[1, 0] * c - G[1, 1] * s
    g22 = G[1, 0] * s + G[1, 1] * c
    g = PlanarMap.lower_triangular([[g11, 0.0], [g21, g22]])
    return g, PlanarMap.rotation(theta)


def factor_unitdet(G) -> tuple[PlanarMap, float, PlanarMap]:
    """Split det-positive G as gp.(lambda.R) with det gp = 1, gp11 > 0."""
    G = np.asarray(G, dtype=float).reshape(2, 2)
    d = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    if not d > 0.0:
        raise NegativeDeterminant("unit-determinant split needs det G > 0")
    lam = math.sqrt(d)
    g, rot = factor_linear(G)
    gp = PlanarMap.lower_triangular(g.G / lam)
    return gp, lam, rot


def factor_projective(s: PlanarMap) -> tuple[PlanarMap, PlanarMap]:
    """Split s into a pure perspective s2 after an affine s1, s = s2 o s1."""
    d = s.det
    if d == 0.0:
        raise Singular("map is not invertible")
    if s.p[0] == 0.0 and s.p[1] == 0.0:
        s1 = PlanarMap(AFFINE, s.G, s.t, np.zeros(2))
        return PlanarMap.identity(), s1
    # Write (G.x + t)/(1 + p.x) = y/(1 + p'.y) with y = A.x + b:
    # matching homogeneous representatives gives p' = G^-T p and an overall
    # scale k = 1/(1 - p'.t) on the affine block.
    ginv_t = np.array([[s.G[1, 1], -s.G[1, 0]],
                       [-s.G[0, 1], s.G[0, 0]]]) / d
    pp = ginv_t @ s.p
    denom = 1.0 - pp @ s.t
    if abs(denom) < _EPS_CHART:
        raise Singular("perspective split leaves the 1 + p.x chart")
    k = 1.0 / denom
    s2 = PlanarMap.restricted_projective(pp)
    s1 = PlanarMap(AFFINE, k * s.G, k * s.t, np.zeros(2))
    return s2, s1


# ---------------------------------------------------------- text format ---

_KIND_IO = {
    TRANSLATION: ("translation",
                  lambda m: [m.t[0], m.t[1]],
                  lambda v: PlanarMap.translation(v)),
    ROTATION: ("rotation",
               lambda m: [m.theta],
               lambda v: PlanarMap.rotation(v[0])),
    SCALING: ("scaling",
              lambda m: [m.scale],
              lambda v: PlanarMap.scaling(v[0])),
    REFLECTION: ("reflection",
                 lambda m: [float(m.axis)],
                 lambda v: PlanarMap.reflection(int(v[0]))),
    LOWER_TRIANGULAR: ("lower",
                       lambda m: [m.G[0, 0], m.G[1, 0], m.G[1, 1]],
                       lambda v: PlanarMap.lower_triangular(
                           [[v[0], 0.0], [v[1], v[2]]])),
    LINEAR: ("linear",
             lambda m: list(m.G.ravel()),
             lambda v: PlanarMap.linear([v[0:2], v[2:4]])),
    AFFINE: ("affine",
             lambda m: list(m.G.ravel()) + list(m.t),
             lambda v: PlanarMap.affine([v[0:2], v[2:4]], v[4:6])),
    PROJECTIVE: ("projective",
                 lambda m: list(m.G.ravel()) + list(m.t) + list(m.p),
                 lambda v: PlanarMap.projective([v[0:2], v[2:4]],
                                                v[4:6], v[6:8])),
}

_PARSE = {name: (kind, build)
          for kind, (name, _, build) in _KIND_IO.items()}

_PARAM_COUNT = {"translation": 2, "rotation": 1, "scaling": 1,
                "reflection": 1, "lower": 3, "linear": 4, "affine": 6,
                "projective": 8}


def format_map(m: PlanarMap) -> str:
    """One-line text form, e.g. ``projective G11 G12 G21 G22 t1 t2 p1 p2``."""
    name, dump, _ = _KIND_IO[m.kind]
    return " ".join([name] + [repr(float(v)) for v in dump(m)])


def parse_map(line: str) -> PlanarMap:
    """Parse the one-line text form produced by :func:`format_map`."""
    parts = line.split()
    if not parts or parts[0] not in _PARSE:
        raise ValueError(f"unknown map kind in {line!r}")
    name = parts[0]
    if len(parts) - 1 != _PARAM_COUNT[name]:
        raise ValueError(
            f"{name} expects {_PARAM_COUNT[name]} parameters, "
            f"got {len(parts) - 1}")
    values = np.array([float(v) for v in parts[1:]])
    _, build = _PARSE[name]
    return build(values)
