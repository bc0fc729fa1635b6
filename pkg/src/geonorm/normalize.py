"""Constraint-solving normalizers for the planar transformation groups.

Each normalizer measures constraint functionals of the image, solves them
for the parameters of a group element, and returns that element together
with the image warped into its canonical frame.  Multi-parameter groups are
handled in stages (translation, whitening, scale, rotation, perspective),
with each stage's map composed into a single element so the final canonical
raster is produced by one warp of the original input.

Reported ``residuals`` are the constraint-equation residuals evaluated with
the measured moments and the solved parameters; re-evaluating constraints
on the warped output raster is additionally limited by interpolation error
(roughly pitch^2 relative), which is what the acceptance tolerances on
"closure" reflect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateRadius, DegenerateSecondMoments,
                     DenominatorVanishes, NoConvergence, ZeroMass)
from .groups import PlanarMap, compose, invert
from .moments import (CentralMoments, affine_invariants, central_moments,
                      centroid, log_radial_moment_about, phase_integral_about,
                      radial_moment_about)
from .raster import OutGeometry, Raster, mass, warp

_ORIGIN = (0.0, 0.0)
_HALF_WIDTH_FACTOR = 4.0
_MAX_GRID = 1025
_MU20_REL_FLOOR = 1e-9
_DEGENERATE_REL = 1e-12
_REFLECT_TIE_REL = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the iterative (perspective) solve."""

    tol: float = 1e-6
    max_iter: int = 50
    fd_step: float | None = None
    damping: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.fd_step is not None and not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must be in (0, 1]")


@dataclass(frozen=True)
class NormalizationResult:
    """A normalizing map, the canonical raster, and solve diagnostics."""

    map: PlanarMap
    normalized: Raster
    symmetry_order: int | None
    residuals: tuple[float, ...]
    iterations: int
    contrast_factor: float | None
    input_geometry: OutGeometry
    stages: tuple[tuple[str, PlanarMap], ...] = field(default=())


# ------------------------------------------------------------- geometry ---

def _origin_stats(r: Raster) -> tuple[float, np.ndarray]:
    """(mass sum, second-moment matrix) about the coordinate origin."""
    from . import _kernels
    s = _kernels.central_moment_sums(
        r.intensities, r.origin[0], r.origin[1], r.pitch, 0.0, 0.0)
    if s[0] <= 0.0:
        raise ZeroMass("image has zero mass")
    return float(s[0]), np.array([[s[3], s[4]], [s[4], s[5]]])


def canonical_geometry(r: Raster, m: PlanarMap,
                       stats: tuple[float, np.ndarray] | None = None,
                       half_width_factor: float = _HALF_WIDTH_FACTOR,
                       max_grid: int = _MAX_GRID) -> OutGeometry:
    """Square grid centered at 0 sized to hold the image warped by ``m``.

    The half-width is ``half_width_factor`` times the RMS distance from the
    origin the warped mass will have, and the pitch is rescaled by the same
    mass-size ratio so the canonical raster keeps the input's sampling
    density relative to its content.  The pixel count is clamped to
    ``max_grid`` (odd, so the origin is a pixel center).
    """
    if stats is None:
        stats = _origin_stats(r)
    mass_sum, m0 = stats
    lin = np.asarray(m.G, dtype=float)
    a = np.linalg.inv(lin)
    floor = (r.pitch / 2.0) ** 2
    rms_norm = math.sqrt(max(np.trace(a @ m0 @ a.T) / mass_sum, floor))
    rms_in = math.sqrt(max(np.trace(m0) / mass_sum, floor))
    pitch = r.pitch * rms_norm / rms_in
    half = half_width_factor * rms_norm
    n = 2 * math.ceil(half / pitch - 1e-9) + 1
    if n > max_grid:
        n = max_grid if max_grid % 2 == 1 else max_grid - 1
        pitch = 2.0 * half / (n - 1)
    org = -pitch * (n - 1) / 2.0
    return OutGeometry(n, n, pitch, (org, org))


# --------------------------------------------------- stage measurements ---

def _default_phase_weight(rho):
    """Radial weight used by the rotation stages: rho^3.

    A linear weight would make the first-harmonic integral equal to the
    first moments, which vanish identically on centered images; the cubic
    weight ties the harmonics to third-order structure, which neither
    centering nor whitening constrains away.
    """
    return rho ** 3


def _abs_phase_weight_integral(r: Raster, f=None) -> float:
    """Upper bound scale for phase integrals: sum of |f(rho)| I about 0."""
    x1 = r.origin[0] + r.pitch * np.arange(r.width)
    x2 = r.origin[1] + r.pitch * np.arange(r.height)
    rho = np.hypot(x1[None, :], x2[:, None])
    keep = rho >= r.pitch / 2.0
    w = np.abs(_default_phase_weight(rho) if f is None else f(rho))
    vals = np.where(keep, w * r.intensities, 0.0)
    return float(vals.sum()) * r.pitch * r.pitch


def _measure_rotation(work: Raster, f=None, n_max: int = 8,
                      sym_threshold: float = 1e-3):
    """Smallest harmonic with signal, its phase angle, and the residual.

    Returns (theta, symmetry_order, residual); symmetry_order is None when
    every harmonic up to ``n_max`` is below threshold (the image is
    rotationally symmetric as far as the constraint can see), in which case
    theta is 0.
    """
    weight = f if f is not None else _default_phase_weight
    scale = _abs_phase_weight_integral(work, weight)
    if scale <= 0.0:
        return 0.0, None, 0.0
    for n in range(1, n_max + 1):
        z = phase_integral_about(work, _ORIGIN, n, weight)
        if abs(z) > sym_threshold * scale:
            arg = math.atan2(z.imag, z.real) % (2.0 * math.pi)
            if 2.0 * math.pi - arg < 1e-9:  # wrap-around of a tiny phase
                arg = 0.0
            theta = arg / n
            residual = abs(z * np.exp(-1j * n * theta) / abs(z) - 1.0)
            return theta, n, float(residual)
    return 0.0, None, 0.0


def _rms_about_origin(work: Raster) -> float:
    from . import _kernels
    s = _kernels.central_moment_sums(
        work.intensities, work.origin[0], work.origin[1], work.pitch,
        0.0, 0.0)
    if s[0] <= 0:
        raise ZeroMass("image has zero mass")
    return math.sqrt((s[3] + s[5]) / s[0])


def _measure_scale(work: Raster, mode: str, exponents=(2.0, 0.0), g=None):
    """Scale factor solving the radial-moment constraint about the origin."""
    if _rms_about_origin(work) < work.pitch / 2.0:
        raise DegenerateRadius(
            "all mass at the expansion center; scale is undetermined")
    if mode == "power":
        mu_exp, nu_exp = exponents
        if mu_exp == nu_exp:
            raise ValueError("power-mode exponents must differ")
        num = radial_moment_about(work, _ORIGIN, mu_exp, g)
        den = radial_moment_about(work, _ORIGIN, nu_exp, g)
        if not (num > 0.0 and den > 0.0):
            raise DegenerateRadius("radial moments vanish")
        lam = (num / den) ** (1.0 / (mu_exp - nu_exp))
        residual = num / (den * lam ** (mu_exp - nu_exp)) - 1.0
    elif mode == "log":
        den = radial_moment_about(work, _ORIGIN, 0.0, g)
        if not den > 0.0:
            raise DegenerateRadius("angular-weight mass vanishes")
        num = log_radial_moment_about(work, _ORIGIN, g)
        loglam = num / den
        lam = math.exp(loglam)
        residual = num / den - math.log(lam)
    else:
        raise ValueError(f"unknown scale mode {mode!r}")
    if not (lam > 0.0 and math.isfinite(lam)):
        raise DegenerateRadius("scale constraint has no positive solution")
    return lam, float(residual)


def _whitening_from(cm: CentralMoments) -> PlanarMap:
    """Lower-triangular map making the second-moment matrix mu00 times I."""
    mu00 = cm.mu00
    mu20, mu11, mu02 = cm.A, cm.B, cm.C
    disc = mu20 * mu02 - mu11 * mu11
    if disc <= _DEGENERATE_REL * ((mu20 + mu02) / 2.0) ** 2:
        raise DegenerateSecondMoments(
            "mass is concentrated on a line; whitening is undefined")
    g11 = math.sqrt(mu20 / mu00)
    g21 = mu11 / math.sqrt(mu20 * mu00)
    g22 = math.sqrt(disc / (mu20 * mu00))
    return PlanarMap.lower_triangular([[g11, 0.0], [g21, g22]])


def _whitening_residuals(cm: CentralMoments, lin: np.ndarray,
                         unit_det: bool) -> list[float]:
    """Constraint residuals for the whitening map, by exact moment algebra."""
    a = np.linalg.inv(lin)
    det = abs(np.linalg.det(lin))
    m2 = a @ cm.second_moment_matrix @ a.T / det
    mu00 = cm.mu00 / det
    if unit_det:
        s = (m2[0, 0] + m2[1, 1]) / 2.0
        return [float((m2[1, 1] - m2[0, 0]) / (2.0 * s)),
                float(m2[0, 1] / s)]
    return [float(m2[0, 0] / mu00 - 1.0),
            float(m2[1, 1] / mu00 - 1.0),
            float(m2[0, 1] / mu00)]


# ------------------------------------------------------ the normalizers ---

def normalize_translation(r: Raster,
                          geometry: OutGeometry | None = None
                          ) -> NormalizationResult:
    """Shift the image so its mass center sits at the coordinate origin."""
    c = centroid(r)
    m = PlanarMap.translation(c)
    g = geometry if geometry is not None else r.geometry
    out = warp(r, m, g)
    res = centroid(out) if out.intensities.sum() > 0 else np.zeros(2)
    return NormalizationResult(
        map=m, normalized=out, symmetry_order=None,
        residuals=(float(res[0]), float(res[1])), iterations=0,
        contrast_factor=None, input_geometry=r.geometry,
        stages=(("translate", m),))


def normalize_rotation(r: Raster, cfg: SolverConfig | None = None, *,
                       f=None, n_max: int = 8, sym_threshold: float = 1e-3,
                       geometry: OutGeometry | None = None
                       ) -> NormalizationResult:
    """Rotate a centered image so its lowest live harmonic has zero phase.

    Harmonics n = 1, 2, ... are probed in turn; an n-fold symmetric image
    has vanishing integrals below its symmetry order, so the first harmonic
    above threshold both detects the symmetry order and fixes the angle
    (modulo 2 pi / n, resolved to [0, 2 pi / n)).  A rotationally symmetric
    image (nothing above threshold up to ``n_max``) is returned unrotated
    with ``symmetry_order`` None: it is already canonical.
    """
    del cfg  # closed-form solve; accepted for signature uniformity
    stats = _origin_stats(r)  # raises ZeroMass; also sizes the output grid
    theta, order, residual = _measure_rotation(r, f, n_max, sym_threshold)
    m = PlanarMap.rotation(theta)
    if order is None and geometry is None:
        out = r
    else:
        g = geometry if geometry is not None \
            else canonical_geometry(r, m, stats)
        out = warp(r, m, g)
    return NormalizationResult(
        map=m, normalized=out, symmetry_order=order,
        residuals=(residual,), iterations=0, contrast_factor=None,
        input_geometry=r.geometry, stages=(("rotate", m),))


def normalize_scale(r: Raster, mode: str = "log",
                    cfg: SolverConfig | None = None, *,
                    exponents=(2.0, 0.0), g=None,
                    geometry: OutGeometry | None = None
                    ) -> NormalizationResult:
    """Rescale a centered image to its canonical size.

    ``mode="power"`` equates two radial moments with exponents
    ``exponents``; ``mode="log"`` zeroes the mean log radius, which weights
    center and periphery evenly.
    """
    del cfg
    stats = _origin_stats(r)
    lam, residual = _measure_scale(r, mode, exponents, g)
    m = PlanarMap.scaling(lam)
    gout = geometry if geometry is not None \
        else canonical_geometry(r, m, stats)
    out = warp(r, m, gout)
    return NormalizationResult(
        map=m, normalized=out, symmetry_order=None,
        residuals=(residual,), iterations=0, contrast_factor=None,
        input_geometry=r.geometry, stages=(("scale", m),))


def _reflection_discriminant(work: Raster) -> tuple[float, float]:
    """Signed functional deciding the mirror fix, and its tie scale.

    The rotation constraint leaves one improper ambiguity: flipping the
    image across the axis the phase constraint aligns it to.  The moment
    mu03 is odd under exactly that flip, so its sign picks a branch.
    """
    cm = central_moments(work)
    return float(cm.mu[0, 3]), cm.mu00 * cm.rms_radius ** 3


@dataclass
class _Pipeline:
    """Mutable accumulator for staged normalization of one input raster."""

    source: Raster
    stats_in: tuple
    m: PlanarMap = field(default_factory=PlanarMap.identity)
    work: Raster | None = None
    stages: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    symmetry_order: int | None = None

    def push(self, name: str, stage_map: PlanarMap, residuals=()):
        self.m = compose(self.m, stage_map)
        self.stages.append((name, stage_map))
        self.residuals.extend(float(v) for v in residuals)
        self.work = warp(self.source, self.m,
                         canonical_geometry(self.source, self.m,
                                            self.stats_in))

    def translate(self):
        c = centroid(self.work)
        self.push("translate", PlanarMap.translation(c))
        res = centroid(self.work)
        self.residuals.extend(float(v) for v in res)

    def scale(self, mode, exponents, g):
        lam, residual = _measure_scale(self.work, mode, exponents, g)
        self.push("scale", PlanarMap.scaling(lam), [residual])

    def rotate(self, f, n_max, sym_threshold, name="rotate"):
        theta, order, residual = _measure_rotation(
            self.work, f, n_max, sym_threshold)
        self.symmetry_order = order
        self.push(name, PlanarMap.rotation(theta), [residual])

    def whiten(self, unit_det: bool):
        cm = central_moments(self.work)
        if cm.A / cm.mu00 < _MU20_REL_FLOOR * cm.rms_radius ** 2:
            # Horizontal spread vanished; a quarter turn swaps the roles of
            # the two axes, after which the whitening formula is usable.
            self.push("pre-rotate", PlanarMap.rotation(math.pi / 2.0))
            cm = central_moments(self.work)
        gmap = _whitening_from(cm)
        if unit_det:
            gmap = PlanarMap.lower_triangular(math.sqrt(gmap.det) * gmap.G)
        self.push("whiten", gmap, _whitening_residuals(cm, gmap.G, unit_det))

    def reflect_fix(self, f, n_max, sym_threshold):
        d, scale = _reflection_discriminant(self.work)
        if d < -_REFLECT_TIE_REL * scale:
            self.push("reflect", PlanarMap.reflection(1))
            self.rotate(f, n_max, sym_threshold, name="re-rotate")

    def finish(self, variant_label: str, *, contrast: bool,
               geometry: OutGeometry | None, iterations: int = 0
               ) -> NormalizationResult:
        del variant_label
        g = geometry if geometry is not None else canonical_geometry(
            self.source, self.m, self.stats_in)
        out = warp(self.source, self.m, g)
        factor = None
        if contrast:
            factor = mass(out)
            if factor <= 0.0:
                raise ZeroMass("normalized image has zero mass")
            out = out.scaled(1.0 / factor)
        return NormalizationResult(
            map=self.m, normalized=out, symmetry_order=self.symmetry_order,
            residuals=tuple(self.residuals), iterations=iterations,
            contrast_factor=factor, input_geometry=self.source.geometry,
            stages=tuple(self.stages))


def _start_pipeline(r: Raster) -> _Pipeline:
    pipe = _Pipeline(source=r, stats_in=_origin_stats(r))
    pipe.work = r
    return pipe


def normalize_similarity(r: Raster, cfg: SolverConfig | None = None, *,
                         scale_mode: str = "log", exponents=(2.0, 0.0),
                         f=None, g=None, reflection: bool = False,
                         contrast: bool = False, n_max: int = 8,
                         sym_threshold: float = 1e-3,
                         geometry: OutGeometry | None = None
                         ) -> NormalizationResult:
    """Translation, scale, and rotation normalization in one composed map."""
    del cfg
    pipe = _start_pipeline(r)
    pipe.translate()
    pipe.scale(scale_mode, exponents, g)
    pipe.rotate(f, n_max, sym_threshold)
    if reflection:
        pipe.reflect_fix(f, n_max, sym_threshold)
    return pipe.finish("similarity", contrast=contrast, geometry=geometry)


def affine_partial(r: Raster) -> tuple[PlanarMap, Raster]:
    """Whitening map and partially normalized raster for a centered image.

    The returned map is lower-triangular except when the horizontal spread
    vanishes, in which case a quarter-turn pre-rotation is composed in.
    """
    pipe = _start_pipeline(r)
    pipe.whiten(unit_det=False)
    return pipe.m, pipe.work


def normalize_affine(r: Raster, variant: str = "triangular",
                     cfg: SolverConfig | None = None, *,
                     scale_mode: str = "log", exponents=(2.0, 0.0),
                     f=None, g=None, reflection: bool = False,
                     contrast: bool = False, n_max: int = 8,
                     sym_threshold: float = 1e-3,
                     geometry: OutGeometry | None = None
                     ) -> NormalizationResult:
    """Full affine normalization.

    The ``triangular`` variant whitens the second moments and then fixes
    rotation; the ``unitdet`` variant uses the unit-determinant shear
    instead and therefore adds a scale stage before the rotation fix.
    """
    del cfg
    if variant not in ("triangular", "unitdet"):
        raise ValueError(f"unknown affine variant {variant!r}")
    pipe = _start_pipeline(r)
    pipe.translate()
    pipe.whiten(unit_det=(variant == "unitdet"))
    if variant == "unitdet":
        pipe.scale(scale_mode, exponents, g)
    pipe.rotate(f, n_max, sym_threshold)
    if reflection:
        pipe.reflect_fix(f, n_max, sym_threshold)
    return pipe.finish(variant, contrast=contrast, geometry=geometry)


def normalize_contrast(r: Raster) -> tuple[Raster, float]:
    """Divide by the total mass, making the image sum to one."""
    total = mass(r)
    if total <= 0.0:
        raise ZeroMass("image has zero mass")
    return r.scaled(1.0 / total), total


# ------------------------------------------------------------ projective ---

class _BadStep(Exception):
    """Internal: a candidate perspective parameter is unusable."""


def _psi_pair(work: Raster) -> tuple[float, float]:
    inv = affine_invariants(central_moments(work))
    return inv.psi1, inv.psi2


def normalize_projective(r: Raster, targets=None,
                         cfg: SolverConfig | None = None, *,
                         pre_affine: bool = True, f=None, g=None,
                         scale_mode: str = "log", exponents=(2.0, 0.0),
                         reflection: bool = False, contrast: bool = False,
                         n_max: int = 8, sym_threshold: float = 1e-3,
                         geometry: OutGeometry | None = None
                         ) -> NormalizationResult:
    """Pin two invariant functionals to target values with a perspective map.

    The two-parameter pure perspective x / (1 + p.x) changes the affine
    invariants psi1, psi2; a damped Newton iteration (Jacobian by central
    finite differences) drives them to ``targets``.  Targets default to the
    input's own values, for which p = 0 already solves the constraints.
    A final affine normalization is always applied after the perspective
    stage; an affine pre-normalization (default on) is composed in front,
    which does not change the outcome but conditions the solve.

    Raises :class:`NoConvergence` (carrying a best-effort result and the
    residual-norm trace) when the targets cannot be reached, which happens
    for target values outside the attainable range of the image.
    """
    cfg = cfg or SolverConfig()
    pipe = _start_pipeline(r)
    if pre_affine:
        pipe.translate()
        pipe.whiten(unit_det=False)
        pipe.rotate(f, n_max, sym_threshold)
    else:
        pipe.translate()
    # The solve runs on a doubled-density resampling of the working frame:
    # the invariant pair is sensitive to perspective only at second order
    # over the small p range, so quadrature noise must be kept well below
    # that signal for the Newton root to mean anything.
    g0 = canonical_geometry(r, pipe.m, pipe.stats_in)
    fine = OutGeometry(2 * g0.width - 1, 2 * g0.height - 1,
                       g0.pitch / 2.0, g0.origin)
    base = warp(r, pipe.m, fine)
    base_mass = mass(base)
    cm_base = central_moments(base)
    if targets is None:
        targets = _psi_pair(base)
    t1, t2 = float(targets[0]), float(targets[1])
    fd = cfg.fd_step if cfg.fd_step is not None \
        else 1e-4 / cm_base.rms_radius

    def evaluate(p, strict=False):
        pm = PlanarMap.restricted_projective(p)
        try:
            cand = warp(base, pm, base.geometry)
            if mass(cand) < 0.8 * base_mass:
                raise _BadStep("mass escaped the solve grid")
            v1, v2 = _psi_pair(cand)
        except (DenominatorVanishes, DegenerateSecondMoments) as exc:
            if strict:
                raise
            raise _BadStep(str(exc)) from exc
        return np.array([v1 - t1, v2 - t2])

    p = np.zeros(2)
    start = evaluate(p, strict=True) + np.array([t1, t2])  # psi at p = 0
    goal = np.array([t1, t2])

    def residual_at(p, local_goal):
        return evaluate(p) + goal - local_goal

    # Homotopy continuation from the image's own invariant values toward
    # the requested targets.  The invariant pair can admit several roots
    # within the usable perspective range; tracking the root connected to
    # p = 0 picks the same branch for an image and its distorted copies,
    # which plain Newton from p = 0 does not guarantee.
    fnorm_final = float(np.linalg.norm(evaluate(p)))
    trace = [fnorm_final]
    iterations = 0
    s = 0.0
    ds = 1.0 if fnorm_final <= cfg.tol else 0.5
    failure = None

    while fnorm_final > cfg.tol and failure is None:
        s_try = min(1.0, s + ds)
        local_goal = start + s_try * (goal - start)
        leg_tol = cfg.tol if s_try >= 1.0 else max(cfg.tol, 1e-8)
        p_leg = p.copy()
        try:
            fval = residual_at(p_leg, local_goal)
        except _BadStep as exc:
            failure = str(exc)
            break
        fnorm = float(np.linalg.norm(fval))
        damping = cfg.damping
        leg_ok = fnorm <= leg_tol
        for _ in range(12):
            if leg_ok or iterations >= cfg.max_iter:
                break
            iterations += 1
            jac = np.empty((2, 2))
            try:
                for k in range(2):
                    e = np.zeros(2)
                    e[k] = fd
                    jac[:, k] = (residual_at(p_leg + e, local_goal)
                                 - residual_at(p_leg - e, local_goal)) \
                        / (2.0 * fd)
                step = np.linalg.solve(jac, -fval)
            except (_BadStep, np.linalg.LinAlgError):
                break
            accepted = False
            alpha = damping
            for _ in range(30):
                try:
                    cand_f = residual_at(p_leg + alpha * step, local_goal)
                except _BadStep:
                    alpha /= 2.0
                    continue
                cand_norm = float(np.linalg.norm(cand_f))
                if cand_norm < fnorm:
                    p_leg = p_leg + alpha * step
                    fval, fnorm = cand_f, cand_norm
                    damping = min(1.0, alpha * 2.0)
                    accepted = True
                    break
                alpha /= 2.0
            fnorm_final = min(fnorm_final,
                              float(np.linalg.norm(evaluate(p_leg)))) \
                if accepted else fnorm_final
            trace.append(fnorm_final)
            if not accepted:
                break
            leg_ok = fnorm <= leg_tol
        if leg_ok:
            p = p_leg
            s = s_try
            ds = min(1.0, ds * 1.6)
            fnorm_final = float(np.linalg.norm(evaluate(p)))
            trace.append(fnorm_final)
            if s >= 1.0 and fnorm_final <= cfg.tol:
                break
            if s >= 1.0:
                # Final leg claimed convergence but the float recheck is
                # above tol; treat as converged only within 2x.
                if fnorm_final <= 2.0 * cfg.tol:
                    break
                failure = "final residual above tolerance"
        else:
            ds /= 2.0
            if ds < 1.0 / 64.0:
                failure = "continuation stalled (targets out of range?)"
        if iterations >= cfg.max_iter and fnorm_final > cfg.tol:
            failure = "iteration budget exhausted"

    trace = list(np.minimum.accumulate(trace))
    if fnorm_final > cfg.tol and failure is None:
        failure = "residual stalled above tol"
    if failure is not None and fnorm_final > cfg.tol:
        fval = evaluate(p)
        raise _no_convergence(pipe, p, fval, trace, iterations, contrast,
                              geometry, reason=failure, f=f, n_max=n_max,
                              sym_threshold=sym_threshold)

    fval = evaluate(p)
    return _finish_projective(pipe, p, fval, trace, iterations, contrast,
                              geometry, f=f, n_max=n_max,
                              sym_threshold=sym_threshold)


def _finish_projective(pipe: _Pipeline, p, fval, trace, iterations,
                       contrast, geometry, *, f, n_max, sym_threshold
                       ) -> NormalizationResult:
    pipe.push("perspective", PlanarMap.restricted_projective(p),
              [float(fval[0]), float(fval[1])])
    pipe.translate()
    pipe.whiten(unit_det=False)
    pipe.rotate(f, n_max, sym_threshold)
    result = pipe.finish("projective", contrast=contrast, geometry=geometry,
                         iterations=iterations)
    # Surface the perspective residuals first; they are the solve's verdict.
    res = (float(fval[0]), float(fval[1])) + result.residuals
    return NormalizationResult(
        map=result.map, normalized=result.normalized,
        symmetry_order=result.symmetry_order, residuals=res,
        iterations=iterations, contrast_factor=result.contrast_factor,
        input_geometry=result.input_geometry, stages=result.stages)


def _no_convergence(pipe: _Pipeline, p, fval, trace, iterations, contrast,
                    geometry, *, reason, f, n_max, sym_threshold
                    ) -> NoConvergence:
    try:
        best = _finish_projective(pipe, p, fval, trace, iterations,
                                  contrast, geometry, f=f, n_max=n_max,
                                  sym_threshold=sym_threshold)
    except Exception:  # noqa: BLE001  (best effort only)
        best = None
    return NoConvergence(
        f"perspective solve did not converge: {reason}; "
        f"best residual norm {float(np.linalg.norm(fval)):g} "
        f"after {iterations} iterations",
        result=best, trace=trace)


def reconstruct(result: NormalizationResult) -> Raster:
    """Rebuild the original image from its canonical form and map.

    The normalized raster plus the normalizing parameters are a complete
    description: warping back through the inverse map (and undoing the
    contrast division, if any) recovers the input up to resampling error.
    """
    rec = warp(result.normalized, invert(result.map), result.input_geometry)
    if result.contrast_factor is not None:
        rec = rec.scaled(result.contrast_factor)
    return rec
