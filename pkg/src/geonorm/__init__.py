"""Canonical forms of images under planar viewing-transformation groups.

The library computes, for a grayscale image and a chosen transformation
group (translation, rotation, scaling, similarity, affine, restricted
projective, 3D rotations of a spherical image), the group element that
maps the image to a canonical form, by solving moment constraints.  The
canonical form is invariant under the group action on the input, which the
``verify`` harness checks empirically.
"""

from ._kernels import BACKEND
from .errors import (DegenerateRadius, DegenerateSecondMoments,
                     DenominatorVanishes, GeonormError, MalformedHeader,
                     NegativeDeterminant, NoConvergence, Singular,
                     UndefinedDirection, ZeroMass)
from .groups import (PlanarMap, apply_map, compose, factor_linear,
                     factor_projective, factor_unitdet, format_map, invert,
                     parse_map)
from .moments import (AffineInvariants, CentralMoments, affine_invariants,
                      central_moments, centroid, log_radial_moment,
                      phase_integral, radial_moment, reflection_functional)
from .normalize import (NormalizationResult, SolverConfig, affine_partial,
                        canonical_geometry, normalize_affine,
                        normalize_contrast, normalize_projective,
                        normalize_rotation, normalize_scale,
                        normalize_similarity, normalize_translation,
                        reconstruct)
from .raster import OutGeometry, Raster, mass, sample, warp
from .sphere import (Rotation3, SphericalImage, normalize_sphere,
                     read_spherical, rotate_sphere, sphere_center_of_mass,
                     write_spherical)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AffineInvariants",
    "CentralMoments",
    "DegenerateRadius",
    "DegenerateSecondMoments",
    "DenominatorVanishes",
    "GeonormError",
    "MalformedHeader",
    "NegativeDeterminant",
    "NoConvergence",
    "NormalizationResult",
    "OutGeometry",
    "PlanarMap",
    "Raster",
    "Rotation3",
    "Singular",
    "SolverConfig",
    "SphericalImage",
    "UndefinedDirection",
    "ZeroMass",
    "affine_invariants",
    "affine_partial",
    "apply_map",
    "canonical_geometry",
    "central_moments",
    "centroid",
    "compose",
    "factor_linear",
    "factor_projective",
    "factor_unitdet",
    "format_map",
    "invert",
    "log_radial_moment",
    "mass",
    "normalize_affine",
    "normalize_contrast",
    "normalize_projective",
    "normalize_rotation",
    "normalize_scale",
    "normalize_similarity",
    "normalize_sphere",
    "normalize_translation",
    "parse_map",
    "phase_integral",
    "radial_moment",
    "read_spherical",
    "reconstruct",
    "reflection_functional",
    "rotate_sphere",
    "sample",
    "sphere_center_of_mass",
    "warp",
    "write_spherical",
]
