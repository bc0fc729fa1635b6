"""Command-line surface: image I/O, reports, normalization, verification.

Exit codes are a stable contract: 0 success, 1 usage, 2 I/O, 3 zero mass,
4 degenerate moments, 5 no convergence (best-effort outputs still
written), 6 singular/vanishing-denominator map, 7 undefined spherical
direction.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .errors import (DegenerateRadius, DegenerateSecondMoments,
                     DenominatorVanishes, MalformedHeader, NoConvergence,
                     Singular, UndefinedDirection, ZeroMass)
from .groups import format_map
from .harness import GROUPS, MapRanges, RunConfig, run_verify, verify_csv, \
    verify_summary
from .moments import affine_invariants, central_moments
from .normalize import SolverConfig, normalize_affine
from .raster import Raster
from .sphere import (normalize_sphere, read_spherical, rotate_sphere,
                     write_spherical)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ZERO_MASS = 3
EXIT_DEGENERATE = 4
EXIT_NO_CONVERGENCE = 5
EXIT_SINGULAR = 6
EXIT_NO_DIRECTION = 7

_EXIT_BY_ERROR = (
    ((OSError, MalformedHeader), EXIT_IO),
    ((ZeroMass,), EXIT_ZERO_MASS),
    ((DegenerateSecondMoments, DegenerateRadius), EXIT_DEGENERATE),
    ((NoConvergence,), EXIT_NO_CONVERGENCE),
    ((Singular, DenominatorVanishes), EXIT_SINGULAR),
    ((UndefinedDirection,), EXIT_NO_DIRECTION),
)
_ALL_ERRORS = tuple(exc for excs, _ in _EXIT_BY_ERROR for exc in excs)


# ------------------------------------------------------------ PGM I/O ---

def _header_tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated tokens, collecting # comments."""
    tokens: list[bytes] = []
    comments: list[str] = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise MalformedHeader("truncated header")
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            end = n if end < 0 else end
            comments.append(data[pos:end].decode("latin-1"))
            pos = end + 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, comments, pos


def _parse_geometry_comment(comments, width, height):
    """Pull pitch/origin out of a ``# geonorm`` header comment, if present."""
    pitch = 1.0
    origin = None
    for line in comments:
        parts = line[1:].split()
        if not parts or parts[0] != "geonorm":
            continue
        i = 1
        while i < len(parts):
            if parts[i].startswith("pitch="):
                pitch = float(parts[i][len("pitch="):])
                i += 1
            elif parts[i].startswith("origin="):
                if i + 1 >= len(parts):
                    raise MalformedHeader("origin needs two values")
                origin = (float(parts[i][len("origin="):]),
                          float(parts[i + 1]))
                i += 2
            else:
                i += 1
    if origin is None:
        origin = (-pitch * (width - 1) / 2.0, -pitch * (height - 1) / 2.0)
    return pitch, origin


def read_image(path) -> Raster:
    """Read a portable graymap (P2 ascii or P5 binary, 8 or 16 bit).

    Intensities are scaled to [0, 1]; grid geometry comes from a
    ``# geonorm pitch=<v> origin=<x> <y>`` header comment, defaulting to
    pitch 1 with the grid centered on the origin.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    (magic,), comments, pos = _header_tokens(data, 1, 0)
    if magic not in (b"P2", b"P5"):
        raise MalformedHeader(f"unsupported magic {magic!r}")
    dims, more, pos = _header_tokens(data, 3, pos)
    comments += more
    try:
        width, height, maxval = (int(v) for v in dims)
    except ValueError as exc:
        raise MalformedHeader("bad width/height/maxval") from exc
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise MalformedHeader("bad width/height/maxval")
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = ">u2" if maxval > 255 else "u1"
        count = width * height
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
        if raw.size != count:
            raise MalformedHeader("truncated pixel data")
    else:
        vals, _, _ = _header_tokens(data, width * height, pos)
        try:
            raw = np.array([int(v) for v in vals])
        except ValueError as exc:
            raise MalformedHeader("bad ascii sample") from exc
    if raw.max(initial=0) > maxval:
        raise MalformedHeader("sample exceeds maxval")
    pitch, origin = _parse_geometry_comment(comments, width, height)
    img = raw.reshape(height, width).astype(float) / maxval
    return Raster(width, height, pitch, origin, img)


def write_image(r: Raster, path, fmt: str = "P5",
                maxval: int = 65535) -> None:
    """Write a graymap; intensities are clipped to [0, 1] and quantized."""
    if fmt not in ("P2", "P5"):
        raise ValueError("fmt must be 'P2' or 'P5'")
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in [1, 65535]")
    raw = np.rint(np.clip(r.intensities, 0.0, 1.0) * maxval).astype(np.uint32)
    header = (f"{fmt}\n# geonorm pitch={r.pitch!r} "
              f"origin={r.origin[0]!r} {r.origin[1]!r}\n"
              f"{r.width} {r.height}\n{maxval}\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if fmt == "P5":
            dtype = ">u2" if maxval > 255 else "u1"
            fh.write(raw.astype(dtype).tobytes())
        else:
            for row in raw:
                fh.write(" ".join(str(int(v)) for v in row).encode("ascii"))
                fh.write(b"\n")


# ------------------------------------------------------------ commands ---

def _fmt(v: float) -> str:
    return f"{v:.12g}"


def cmd_moments(args) -> int:
    r = read_image(args.input)
    cm = central_moments(r)
    lines = [f"centroid1={_fmt(cm.centroid[0])}",
             f"centroid2={_fmt(cm.centroid[1])}"]
    for p in range(4):
        for q in range(4 - p):
            lines.append(f"mu{p}{q}={_fmt(cm.mu[p, q])}")
    try:
        inv = affine_invariants(cm)
    except DegenerateSecondMoments as exc:
        # The moments themselves are well defined; report them before
        # flagging the undefined invariants.
        print("\n".join(lines))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    for name in ("psi1", "psi2", "psi3", "i1", "i2", "i3", "i4"):
        lines.append(f"{name}={_fmt(getattr(inv, name))}")
    print("\n".join(lines))
    return EXIT_OK


def _solver_from(args) -> SolverConfig:
    return SolverConfig(tol=args.tol, max_iter=args.max_iter,
                        fd_step=args.fd_step, damping=args.damping)


def _run_config_from(args) -> RunConfig:
    cfg = RunConfig(
        group=args.group,
        trials=getattr(args, "trials", 1),
        seed=getattr(args, "seed", 0),
        jobs=getattr(args, "jobs", 1),
        scale_mode=args.scale_mode,
        exponents=tuple(args.exponents),
        reflection=args.reflection,
        contrast=args.contrast,
        pre_affine=args.pre_affine,
        targets=tuple(args.targets) if args.targets else None,
        reference=args.reference,
        solver=_solver_from(args),
        ranges=MapRanges(),
    )
    if cfg.group == "projective" and cfg.targets is None and cfg.reference:
        ref = read_image(cfg.reference)
        refn = normalize_affine(ref, "triangular", cfg.solver).normalized
        inv = affine_invariants(central_moments(refn))
        cfg = replace(cfg, targets=(inv.psi1, inv.psi2))
    return cfg


def _write_sidecar(path, result) -> None:
    order = result.symmetry_order
    factor = result.contrast_factor
    lines = [f"map={format_map(result.map)}",
             f"symmetry_order={order if order is not None else 'none'}",
             f"iterations={result.iterations}",
             "residuals=" + " ".join(repr(v) for v in result.residuals),
             f"contrast_factor={factor!r}" if factor is not None
             else "contrast_factor=none"]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_normalize(args) -> int:
    from .harness import normalize_for
    r = read_image(args.input)
    cfg = _run_config_from(args)
    sidecar = args.sidecar or (args.output + ".map")
    try:
        result = normalize_for(cfg.group, r, cfg, targets=cfg.targets)
    except NoConvergence as exc:
        if exc.result is not None:
            write_image(exc.result.normalized, args.output,
                        fmt=args.format, maxval=args.maxval)
            _write_sidecar(sidecar, exc.result)
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    write_image(result.normalized, args.output, fmt=args.format,
                maxval=args.maxval)
    _write_sidecar(sidecar, result)
    print(f"normalized {args.input} -> {args.output} "
          f"(map {format_map(result.map)})")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _run_config_from(args)
    image = read_spherical(args.input) if cfg.group == "sphere" \
        else read_image(args.input)
    report = run_verify(image, cfg)
    if args.csv:
        with open(args.csv, "w", encoding="ascii", newline="") as fh:
            fh.write(verify_csv(report))
    sys.stdout.write(verify_summary(report))
    return EXIT_OK


def cmd_sphere_normalize(args) -> int:
    img = read_spherical(args.input)
    rot, norm, order = normalize_sphere(img)
    write_spherical(norm, args.output)
    sidecar = args.sidecar or (args.output + ".map")
    with open(sidecar, "w", encoding="ascii") as fh:
        fh.write("map=rotation3 "
                 + " ".join(repr(float(v)) for v in rot.matrix.ravel())
                 + "\n")
        fh.write(f"symmetry_order={order if order is not None else 'none'}\n")
    print(f"normalized {args.input} -> {args.output}")
    return EXIT_OK


# ------------------------------------------------------------- parsing ---

class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_normalize_options(p: argparse.ArgumentParser,
                           groups=GROUPS) -> None:
    p.add_argument("--group", choices=groups, default="similarity")
    p.add_argument("--scale-mode", choices=("log", "power"), default="log",
                   dest="scale_mode")
    p.add_argument("--exponents", type=float, nargs=2, default=(2.0, 0.0),
                   metavar=("MU", "NU"),
                   help="power-mode radial moment exponents")
    p.add_argument("--reflection", action="store_true",
                   help="fix the mirror ambiguity")
    p.add_argument("--contrast", action="store_true",
                   help="divide the output by its total mass")
    p.add_argument("--no-pre-affine", action="store_false",
                   dest="pre_affine",
                   help="skip the affine stage before the perspective solve")
    p.add_argument("--targets", type=float, nargs=2, default=None,
                   metavar=("PSI1", "PSI2"),
                   help="perspective target values")
    p.add_argument("--reference", default=None,
                   help="image whose invariants provide perspective targets")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=50, dest="max_iter")
    p.add_argument("--fd-step", type=float, default=None, dest="fd_step")
    p.add_argument("--damping", type=float, default=1.0)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="geonorm",
                     description="Canonical forms of images under "
                                 "viewing-transformation groups")
    parser.add_argument("--config", default=None,
                        help="JSON file of defaults; flags override")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)
    commands = {}

    p = commands["moments"] = sub.add_parser(
        "moments", help="print moment and invariant report")
    p.add_argument("input")
    p.set_defaults(func=cmd_moments)

    planar = tuple(g for g in GROUPS if g != "sphere")
    p = commands["normalize"] = sub.add_parser(
        "normalize", help="write the canonical raster")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--sidecar", default=None,
                   help="parameter file path (default OUTPUT.map)")
    p.add_argument("--format", choices=("P2", "P5"), default="P5")
    p.add_argument("--maxval", type=int, default=65535)
    _add_normalize_options(p, planar)
    p.set_defaults(func=cmd_normalize)

    p = commands["verify"] = sub.add_parser(
        "verify", help="empirically verify the invariance property")
    p.add_argument("input")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", default=None, help="write per-trial CSV here")
    _add_normalize_options(p)
    p.set_defaults(func=cmd_verify)

    p = commands["sphere-normalize"] = sub.add_parser(
        "sphere-normalize",
        help="normalize a spherical image against rotations")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--sidecar", default=None)
    p.set_defaults(func=cmd_sphere_normalize)
    return parser, commands


def _load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedHeader(f"bad config file: {exc}") from exc
    if not isinstance(overrides, dict):
        raise MalformedHeader("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in overrides.items()}


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config", default=None)
        known, _ = pre.parse_known_args(argv)
        parser, commands = build_parser()
        if known.config:
            # Config values become defaults, so explicit flags override.
            overrides = _load_config(known.config)
            parser.set_defaults(**overrides)
            for sp in commands.values():
                sp.set_defaults(**overrides)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    except _ALL_ERRORS as err:
        for excs, code in _EXIT_BY_ERROR:
            if isinstance(err, excs):
                msg = "zero mass" if isinstance(err, ZeroMass) \
                    else (str(err) or type(err).__name__)
                print(f"error: {msg}", file=sys.stderr)
                return code
        raise  # unreachable


if __name__ == "__main__":
    sys.exit(main())
