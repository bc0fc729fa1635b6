#!/usr/bin/env python3
"""Regenerate the committed test assets under assets/.

Renders the deterministic synthetic images to 16-bit graymaps (plus the
spherical text grid) and writes oracle values computed from closed forms
next to them.  Run from the repository root:

    python scripts/make_assets.py
"""

import json
import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from geonorm import assets  # noqa: E402
from geonorm.cli import write_image  # noqa: E402
from geonorm.sphere import write_spherical  # noqa: E402


def main() -> None:
    out = pathlib.Path(__file__).resolve().parents[1] / "assets"
    out.mkdir(exist_ok=True)

    write_image(assets.blob(), out / "blob.pgm")
    write_image(assets.cross(), out / "cross.pgm")
    write_image(assets.disk(), out / "disk.pgm")
    write_image(assets.gaussian(), out / "gaussian.pgm")
    write_image(assets.ring(), out / "ring.pgm")
    write_spherical(assets.sphere_two_blobs(), out / "sphere_two_blobs.txt")

    gauss = assets.gaussian_oracle()
    ring_radius = 40.0
    ring_width = ring_radius / 20.0
    oracles = {
        "gaussian": {
            "comment": "closed-form moments of the isotropic Gaussian",
            "mu00": gauss["mu00"],
            "mu20": gauss["mu20"],
            "mu02": gauss["mu02"],
            "mu11": gauss["mu11"],
            "mean_square_radius": gauss["mean_square_radius"],
            "sigma": gauss["sigma"],
        },
        "ring": {
            "comment": "thin-annulus scale oracle",
            "radius": ring_radius,
            "width": ring_width,
            "log_scale": math.log(ring_radius),
        },
        "cross": {
            "comment": "exact four-point set",
            "symmetry_order": 4,
            "arm": 40,
            "mu00": 4.0,
            "mu20": 2.0 * 40.0 ** 2,
            "mu02": 2.0 * 40.0 ** 2,
        },
        "disk": {
            "comment": "radially symmetric flat-top bump",
            "psi1": 0.0,
            "psi2": 0.0,
            "psi3": 0.0,
        },
    }
    with open(out / "oracles.json", "w", encoding="ascii") as fh:
        json.dump(oracles, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote assets to {out}")


if __name__ == "__main__":
    main()
