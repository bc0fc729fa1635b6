"""Pure NumPy backend for the hot kernels.

Selected automatically when the compiled extension is unavailable or when
``GEONORM_PURE_PYTHON`` is set.  Semantics must match ``_core.pyx``: the
parity test suite compares both backends on random inputs.
"""

import numpy as np

BACKEND = "numpy"


def warp_bilinear(src, src_ox, src_oy, src_pitch, h,
                  out_ox, out_oy, out_pitch, out_h, out_w):
    """Resample ``src`` through the homogeneous map ``h`` (output -> input).

    Output pixel (i, j) sits at continuous coordinate
    (out_ox + out_pitch*j, out_oy + out_pitch*i); it receives the bilinear
    sample of ``src`` at the mapped coordinate, with zero extension outside
    the pixel-center hull.  Returns (warped, min_abs_denominator) where the
    denominator is the projective 1 + p.x term at the output pixel centers.
    """
    h = np.asarray(h, dtype=float)
    xs = out_ox + out_pitch * np.arange(out_w)
    ys = out_oy + out_pitch * np.arange(out_h)
    x1 = np.broadcast_to(xs[None, :], (out_h, out_w))
    x2 = np.broadcast_to(ys[:, None], (out_h, out_w))

    den = h[2, 0] * x1 + h[2, 1] * x2 + h[2, 2]
    min_den = float(np.abs(den).min())
    if min_den < 1e-300:
        return np.zeros((out_h, out_w)), min_den
    y1 = (h[0, 0] * x1 + h[0, 1] * x2 + h[0, 2]) / den
    y2 = (h[1, 0] * x1 + h[1, 1] * x2 + h[1, 2]) / den

    return _sample_grid(src, src_ox, src_oy, src_pitch, y1, y2), min_den


def _sample_grid(src, ox, oy, pitch, y1, y2):
    """Bilinear sample of src at continuous coordinates, zero extended."""
    nrow, ncol = src.shape
    # Clamp far-field coordinates so floor/int conversion cannot overflow;
    # anything this far out samples the zero extension anyway.
    u = np.clip((y1 - ox) / pitch, -1e15, 1e15)
    v = np.clip((y2 - oy) / pitch, -1e15, 1e15)
    j0 = np.floor(u).astype(np.int64)
    i0 = np.floor(v).astype(np.int64)
    fu = u - j0
    fv = v - i0

    out = np.zeros(u.shape)
    for di, dj, w in ((0, 0, (1 - fu) * (1 - fv)),
                      (0, 1, fu * (1 - fv)),
                      (1, 0, (1 - fu) * fv),
                      (1, 1, fu * fv)):
        ii = i0 + di
        jj = j0 + dj
        ok = (ii >= 0) & (ii < nrow) & (jj >= 0) & (jj < ncol)
        vals = np.zeros(u.shape)
        vals[ok] = src[ii[ok], jj[ok]]
        out += w * vals
    return out


def central_moment_sums(img, ox, oy, pitch, cx, cy):
    """Sums of (x1-cx)^p (x2-cy)^q * I over pixel centers for p+q <= 3.

    Returns a length-10 array ordered
    [s00, s10, s01, s20, s11, s02, s30, s21, s12, s03]; the caller applies
    the pitch^2 cell-area factor.
    """
    nrow, ncol = img.shape
    dx = ox - cx + pitch * np.arange(ncol)
    dy = oy - cy + pitch * np.arange(nrow)
    c0 = img.sum(axis=0)
    r0 = img.sum(axis=1)
    c1 = dy @ img            # sum over rows of dy*I, per column
    c2 = (dy * dy) @ img

    s00 = c0.sum()
    s10 = c0 @ dx
    s01 = r0 @ dy
    s20 = c0 @ (dx * dx)
    s02 = r0 @ (dy * dy)
    s11 = c1 @ dx
    s30 = c0 @ (dx * dx * dx)
    s03 = r0 @ (dy * dy * dy)
    s21 = c1 @ (dx * dx)
    s12 = c2 @ dx
    return np.array([s00, s10, s01, s20, s11, s02, s30, s21, s12, s03])
