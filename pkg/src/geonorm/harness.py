"""Seeded empirical verification of the invariance property.

For a configured group, the harness samples random group elements, warps
the input, normalizes both the original and the warped copy onto a shared
canonical grid, and records how well the two canonical rasters and the
normalizing parameters agree.  Everything is driven by per-trial child
seeds of one root seed, so reports are reproducible and independent of
whether trials run sequentially or concurrently.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GeonormError
from .groups import PlanarMap, compose, format_map
from .moments import affine_invariants, central_moments
from .normalize import (NormalizationResult, SolverConfig, normalize_affine,
                        normalize_projective, normalize_rotation,
                        normalize_scale, normalize_similarity,
                        normalize_translation)
from .raster import OutGeometry, Raster, warp
from .sphere import Rotation3, SphericalImage, normalize_sphere, rotate_sphere

GROUPS = ("translation", "rotation", "scale", "similarity", "affine",
          "affine-unitdet", "projective", "sphere")

# Default per-group bound on the mean absolute canonical-raster
# discrepancy, as a fraction of the reference peak.
DISCREPANCY_TOL = {
    "translation": 1e-9,
    "rotation": 0.02,
    "scale": 0.02,
    "similarity": 0.02,
    "affine": 0.03,
    "affine-unitdet": 0.03,
    "projective": 0.04,
    "sphere": 0.03,
}


@dataclass(frozen=True)
class MapRanges:
    """Sampling ranges for random group elements.

    Chosen so warped test images stay well resolved and projective
    denominators stay safely positive over the support.
    """

    translation_frac: float = 0.25        # of image width, integer-pitch
    scale_range: tuple[float, float] = (0.5, 2.0)
    u_range: tuple[float, float] = (0.7, 1.4)
    w_range: tuple[float, float] = (-0.5, 0.5)
    p_radius_scale: float = 0.05           # bound on |p| * rms radius


@dataclass(frozen=True)
class RunConfig:
    """Normalization options plus harness controls."""

    group: str = "similarity"
    trials: int = 20
    seed: int = 0
    jobs: int = 1
    scale_mode: str = "log"
    exponents: tuple[float, float] = (2.0, 0.0)
    reflection: bool = False
    contrast: bool = False
    pre_affine: bool = True
    targets: tuple[float, float] | None = None
    reference: str | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    ranges: MapRanges = field(default_factory=MapRanges)

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"unknown group {self.group!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


@dataclass(frozen=True)
class TrialRecord:
    index: int
    map_text: str
    mean_abs_frac: float
    max_abs_frac: float
    law_residual: float
    status: str


@dataclass(frozen=True)
class VerifyReport:
    group: str
    seed: int
    trials: tuple[TrialRecord, ...]
    max_mean_abs_frac: float
    max_law_residual: float
    failures: int
    tolerance: float
    passed: bool


def normalize_for(group: str, r: Raster, cfg: RunConfig,
                  geometry: OutGeometry | None = None,
                  targets=None) -> NormalizationResult:
    """Dispatch to the normalizer the configured group needs."""
    if group == "translation":
        return normalize_translation(r, geometry=geometry)
    if group == "rotation":
        return normalize_rotation(r, cfg.solver, geometry=geometry)
    if group == "scale":
        return normalize_scale(r, cfg.scale_mode, cfg.solver,
                               exponents=cfg.exponents, geometry=geometry)
    if group == "similarity":
        return normalize_similarity(
            r, cfg.solver, scale_mode=cfg.scale_mode,
            exponents=cfg.exponents, reflection=cfg.reflection,
            contrast=cfg.contrast, geometry=geometry)
    if group in ("affine", "affine-unitdet"):
        variant = "unitdet" if group == "affine-unitdet" else "triangular"
        return normalize_affine(
            r, variant, cfg.solver, scale_mode=cfg.scale_mode,
            exponents=cfg.exponents, reflection=cfg.reflection,
            contrast=cfg.contrast, geometry=geometry)
    if group == "projective":
        return normalize_projective(
            r, targets if targets is not None else cfg.targets, cfg.solver,
            pre_affine=cfg.pre_affine, reflection=cfg.reflection,
            contrast=cfg.contrast, geometry=geometry)
    raise ValueError(f"group {group!r} has no planar normalizer")


def sample_map(group: str, rng: np.random.Generator, r: Raster,
               ranges: MapRanges) -> PlanarMap:
    """Draw one random group element from the configured ranges."""
    def translation():
        lim = max(1, int(ranges.translation_frac * r.width))
        shift = rng.integers(-lim, lim + 1, size=2)
        return PlanarMap.translation(r.pitch * shift.astype(float))

    def rotation():
        return PlanarMap.rotation(rng.uniform(0.0, 2.0 * math.pi))

    def scaling():
        lo, hi = ranges.scale_range
        return PlanarMap.scaling(
            math.exp(rng.uniform(math.log(lo), math.log(hi))))

    if group == "translation":
        return translation()
    if group == "rotation":
        return rotation()
    if group == "scale":
        return scaling()
    if group == "similarity":
        return compose(translation(), compose(rotation(), scaling()))
    if group in ("affine", "affine-unitdet"):
        u = rng.uniform(*ranges.u_range)
        w = rng.uniform(*ranges.w_range)
        shear = PlanarMap.lower_triangular([[u, 0.0], [w, 1.0 / u]])
        lin = compose(shear, compose(rotation(), scaling()))
        return compose(translation(), lin)
    if group == "projective":
        rms = central_moments(r).rms_radius
        ang = rng.uniform(0.0, 2.0 * math.pi)
        mag = rng.uniform(0.2, 1.0) * ranges.p_radius_scale / rms
        return PlanarMap.restricted_projective(
            [mag * math.cos(ang), mag * math.sin(ang)])
    raise ValueError(f"cannot sample planar maps for group {group!r}")


def random_rotation3(rng: np.random.Generator) -> Rotation3:
    """Uniform random 3D rotation via a normalized quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return Rotation3(np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]))


def _enlarged_geometry(r: Raster, factor: int = 2) -> OutGeometry:
    """Centered grid ``factor`` times wider at the input pitch.

    Harness warps land on this grid so translated and stretched copies
    keep their full support.
    """
    n_w = factor * (r.width - 1) + 1
    n_h = factor * (r.height - 1) + 1
    return OutGeometry(n_w, n_h, r.pitch,
                       (-r.pitch * (n_w - 1) / 2.0,
                        -r.pitch * (n_h - 1) / 2.0))


def _map_law_residual(smap: PlanarMap, base: NormalizationResult,
                      trial: NormalizationResult) -> float:
    """Deviation of compose(S, N_warped) from N_original.

    The canonical raster of the warped copy is warped(N_warped(x)) =
    original(S(N_warped(x))), so exact normalization makes S composed with
    the warped copy's map equal the original's map.
    """
    h1 = compose(smap, trial.map).homogeneous()
    h2 = base.map.homogeneous()
    return float(np.abs(h1 - h2).max() / (1.0 + np.abs(h2).max()))


def _planar_trial(index: int, r: Raster, base: NormalizationResult,
                  cfg: RunConfig, targets, child_seed) -> TrialRecord:
    rng = np.random.default_rng(child_seed)
    smap = sample_map(cfg.group, rng, r, cfg.ranges)
    try:
        warped = warp(r, smap, _enlarged_geometry(r))
        trial = normalize_for(cfg.group, warped, cfg,
                              geometry=base.normalized.geometry,
                              targets=targets)
        diff = np.abs(trial.normalized.intensities
                      - base.normalized.intensities)
        peak = base.normalized.peak
        return TrialRecord(
            index=index, map_text=format_map(smap),
            mean_abs_frac=float(diff.mean() / peak),
            max_abs_frac=float(diff.max() / peak),
            law_residual=_map_law_residual(smap, base, trial),
            status="ok")
    except GeonormError as exc:
        return TrialRecord(index=index, map_text=format_map(smap),
                           mean_abs_frac=math.nan, max_abs_frac=math.nan,
                           law_residual=math.nan,
                           status=type(exc).__name__)


def _sphere_trial(index: int, img: SphericalImage, base_norm: SphericalImage,
                  base_rot: Rotation3, child_seed) -> TrialRecord:
    rng = np.random.default_rng(child_seed)
    smap = random_rotation3(rng)
    try:
        rotated = rotate_sphere(img, smap)
        rot, norm, _ = normalize_sphere(rotated)
        diff = np.abs(norm.intensities - base_norm.intensities)
        peak = float(base_norm.intensities.max())
        law = float(np.abs(smap.matrix @ rot.matrix
                           - base_rot.matrix).max())
        text = "rotation3 " + " ".join(repr(float(v))
                                       for v in smap.matrix.ravel())
        return TrialRecord(index=index, map_text=text,
                           mean_abs_frac=float(diff.mean() / peak),
                           max_abs_frac=float(diff.max() / peak),
                           law_residual=law, status="ok")
    except GeonormError as exc:
        text = "rotation3 " + " ".join(repr(float(v))
                                       for v in smap.matrix.ravel())
        return TrialRecord(index=index, map_text=text,
                           mean_abs_frac=math.nan, max_abs_frac=math.nan,
                           law_residual=math.nan,
                           status=type(exc).__name__)


def _projective_targets(r: Raster, cfg: RunConfig):
    if cfg.targets is not None:
        return cfg.targets
    ref = normalize_affine(r, "triangular", cfg.solver).normalized
    inv = affine_invariants(central_moments(ref))
    return (inv.psi1, inv.psi2)


def run_verify(image, cfg: RunConfig) -> VerifyReport:
    """Run the configured trial set and summarize agreement."""
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)

    if cfg.group == "sphere":
        if not isinstance(image, SphericalImage):
            raise TypeError("sphere verification needs a SphericalImage")
        base_rot, base_norm, _ = normalize_sphere(image)

        def job(i):
            return _sphere_trial(i, image, base_norm, base_rot, children[i])
    else:
        if not isinstance(image, Raster):
            raise TypeError(f"{cfg.group} verification needs a Raster")
        targets = (_projective_targets(image, cfg)
                   if cfg.group == "projective" else None)
        base = normalize_for(cfg.group, image, cfg, targets=targets)

        def job(i):
            return _planar_trial(i, image, base, cfg, targets, children[i])

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(job, range(cfg.trials)))
    else:
        records = [job(i) for i in range(cfg.trials)]

    ok = [t for t in records if t.status == "ok"]
    max_mean = max((t.mean_abs_frac for t in ok), default=math.nan)
    max_law = max((t.law_residual for t in ok), default=math.nan)
    tol = DISCREPANCY_TOL[cfg.group]
    passed = bool(ok) and len(ok) == len(records) and max_mean <= tol
    return VerifyReport(group=cfg.group, seed=cfg.seed,
                        trials=tuple(records),
                        max_mean_abs_frac=float(max_mean),
                        max_law_residual=float(max_law),
                        failures=len(records) - len(ok),
                        tolerance=tol, passed=passed)


CSV_COLUMNS = ("trial", "map", "mean_abs_frac", "max_abs_frac",
               "law_residual", "status")


def verify_csv(report: VerifyReport) -> str:
    """Fixed-schema CSV: one header row, one row per trial."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for t in report.trials:
        writer.writerow([t.index, t.map_text, repr(t.mean_abs_frac),
                         repr(t.max_abs_frac), repr(t.law_residual),
                         t.status])
    return buf.getvalue()


def verify_summary(report: VerifyReport) -> str:
    lines = [
        f"group={report.group}",
        f"seed={report.seed}",
        f"trials={len(report.trials)}",
        f"failures={report.failures}",
        f"max_mean_abs_frac={report.max_mean_abs_frac!r}",
        f"max_law_residual={report.max_law_residual!r}",
        f"tolerance={report.tolerance!r}",
        f"result={'PASS' if report.passed else 'FAIL'}",
    ]
    return "\n".join(lines) + "\n"


def with_overrides(cfg: RunConfig, **kwargs) -> RunConfig:
    """Convenience for the CLI: replace fields that were provided."""
    clean = {k: v for k, v in kwargs.items() if v is not None}
    return replace(cfg, **clean)
