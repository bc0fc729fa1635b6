"""Backend parity: the compiled kernels must match the NumPy reference."""

import numpy as np
import pytest

from geonorm import _kernels
from geonorm._kernels import _ref

_core = pytest.importorskip("geonorm._kernels._core",
                            reason="compiled kernels not built")


def random_case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 64))
    m = int(rng.integers(3, 64))
    img = rng.uniform(0.0, 1.0, size=(n, m))
    img[img < 0.3] = 0.0
    pitch = float(rng.uniform(0.05, 2.0))
    ox, oy = rng.uniform(-5.0, 5.0, size=2)
    h = np.eye(3)
    h[:2, :2] += rng.uniform(-0.4, 0.4, size=(2, 2))
    h[:2, 2] = rng.uniform(-2.0, 2.0, size=2)
    h[2, :2] = rng.uniform(-0.01, 0.01, size=2)
    return img, float(ox), float(oy), pitch, h


@pytest.mark.parametrize("seed", range(20))
def test_warp_parity(seed):
    img, ox, oy, pitch, h = random_case(seed)
    rng = np.random.default_rng(1000 + seed)
    out_n = int(rng.integers(3, 48))
    gx, gy = rng.uniform(-3.0, 3.0, size=2)
    gp = float(rng.uniform(0.05, 1.5))
    a, da = _ref.warp_bilinear(img, ox, oy, pitch, h, gx, gy, gp,
                               out_n, out_n)
    b, db = _core.warp_bilinear(img, ox, oy, pitch, h, gx, gy, gp,
                                out_n, out_n)
    scale = max(1.0, np.abs(a).max())
    assert np.abs(a - b).max() <= 1e-12 * scale
    assert abs(da - db) <= 1e-12 * max(1.0, abs(da))


@pytest.mark.parametrize("seed", range(20))
def test_moment_sums_parity(seed):
    img, ox, oy, pitch, _ = random_case(seed)
    rng = np.random.default_rng(2000 + seed)
    cx, cy = rng.uniform(-3.0, 3.0, size=2)
    a = _ref.central_moment_sums(img, ox, oy, pitch, cx, cy)
    b = _core.central_moment_sums(img, ox, oy, pitch, cx, cy)
    scale = np.maximum(np.abs(a), 1e-30)
    assert (np.abs(a - b) / scale).max() <= 1e-10


def test_selected_backend_is_exposed():
    assert _kernels.BACKEND in ("cython", "numpy")
    assert callable(_kernels.warp_bilinear)
    assert callable(_kernels.central_moment_sums)


def test_zero_denominator_reported():
    img = np.ones((5, 5))
    h = np.eye(3)
    h[2, 0] = 1.0  # denominator 1 + x1: zero at x1 = -1
    for backend in (_ref, _core):
        out, dmin = backend.warp_bilinear(img, -2.0, -2.0, 1.0, h,
                                          -2.0, -2.0, 1.0, 5, 5)
        assert dmin == 0.0
