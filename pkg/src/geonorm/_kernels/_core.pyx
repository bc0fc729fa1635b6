"""Compiled backend for the hot kernels (bilinear warp, moment sums).

Semantics match ``_ref.py``; both backends are exercised by the parity
tests.  Sums accumulate in scan order, so last-ulp differences from the
NumPy backend are expected and tolerated.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def warp_bilinear(cnp.ndarray[double, ndim=2] src,
                  double src_ox, double src_oy, double src_pitch,
                  cnp.ndarray[double, ndim=2] h,
                  double out_ox, double out_oy, double out_pitch,
                  Py_ssize_t out_h, Py_ssize_t out_w):
    """See ``_ref.warp_bilinear``; output pixel -> input coordinate -> sample."""
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((out_h, out_w))
    cdef double h00 = h[0, 0], h01 = h[0, 1], h02 = h[0, 2]
    cdef double h10 = h[1, 0], h11 = h[1, 1], h12 = h[1, 2]
    cdef double h20 = h[2, 0], h21 = h[2, 1], h22 = h[2, 2]
    cdef Py_ssize_t nrow = src.shape[0], ncol = src.shape[1]
    cdef Py_ssize_t i, j, i0, j0
    cdef double x1, x2, den, ad, y1, y2, u, v, fu, fv
    cdef double v00, v01, v10, v11
    cdef double min_den = 1e308

    for i in range(out_h):
        x2 = out_oy + out_pitch * i
        for j in range(out_w):
            x1 = out_ox + out_pitch * j
            den = h20 * x1 + h21 * x2 + h22
            ad = den if den >= 0.0 else -den
            if ad < min_den:
                min_den = ad
            if ad < 1e-300:
                continue
            y1 = (h00 * x1 + h01 * x2 + h02) / den
            y2 = (h10 * x1 + h11 * x2 + h12) / den
            u = (y1 - src_ox) / src_pitch
            v = (y2 - src_oy) / src_pitch
            if u < -1e15:
                u = -1e15
            elif u > 1e15:
                u = 1e15
            if v < -1e15:
                v = -1e15
            elif v > 1e15:
                v = 1e15
            j0 = <Py_ssize_t>u
            if u < j0:
                j0 -= 1
            i0 = <Py_ssize_t>v
            if v < i0:
                i0 -= 1
            fu = u - j0
            fv = v - i0
            v00 = src[i0, j0] if 0 <= i0 < nrow and 0 <= j0 < ncol else 0.0
            v01 = src[i0, j0 + 1] if 0 <= i0 < nrow and 0 <= j0 + 1 < ncol \
                else 0.0
            v10 = src[i0 + 1, j0] if 0 <= i0 + 1 < nrow and 0 <= j0 < ncol \
                else 0.0
            v11 = src[i0 + 1, j0 + 1] \
                if 0 <= i0 + 1 < nrow and 0 <= j0 + 1 < ncol else 0.0
            out[i, j] = ((1.0 - fu) * (1.0 - fv) * v00
                         + fu * (1.0 - fv) * v01
                         + (1.0 - fu) * fv * v10
                         + fu * fv * v11)
    return out, min_den


def central_moment_sums(cnp.ndarray[double, ndim=2] img,
                        double ox, double oy, double pitch,
                        double cx, double cy):
    """See ``_ref.central_moment_sums``; length-10 power-sum vector."""
    cdef Py_ssize_t nrow = img.shape[0], ncol = img.shape[1]
    cdef Py_ssize_t i, j
    cdef double dx, dy, w, wx, dy2
    cdef double s00 = 0, s10 = 0, s01 = 0, s20 = 0, s11 = 0, s02 = 0
    cdef double s30 = 0, s21 = 0, s12 = 0, s03 = 0
    cdef double r0, r1, r2, r3

    for i in range(nrow):
        dy = oy - cy + pitch * i
        dy2 = dy * dy
        r0 = 0
        r1 = 0
        r2 = 0
        r3 = 0
        for j in range(ncol):
            w = img[i, j]
            if w == 0.0:
                continue
            dx = ox - cx + pitch * j
            wx = w * dx
            r0 += w
            r1 += wx
            r2 += wx * dx
            r3 += wx * dx * dx
        s00 += r0
        s10 += r1
        s01 += r0 * dy
        s20 += r2
        s11 += r1 * dy
        s02 += r0 * dy2
        s30 += r3
        s21 += r2 * dy
        s12 += r1 * dy2
        s03 += r0 * dy2 * dy
    return np.array([s00, s10, s01, s20, s11, s02, s30, s21, s12, s03])
