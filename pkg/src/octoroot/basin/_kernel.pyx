# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled basin classifier: one orbit per pixel, rows in parallel."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport isfinite, hypot

cnp.import_array()

ctypedef double complex cplx

cdef enum:
    ST_OK = 0
    ST_SINGULAR = 1


cdef inline bint _finite(cplx z) noexcept nogil:
    return isfinite(z.real) and isfinite(z.imag)


cdef inline void _horner(const cplx* c, int n, cplx x, cplx* f, cplx* df) noexcept nogil:
    cdef cplx p = c[0]
    cdef cplx dp = 0
    cdef int k
    for k in range(1, n):
        dp = dp * x + p
        p = p * x + c[k]
    f[0] = p
    df[0] = dp


cdef inline cplx _feval(const cplx* c, int n, cplx x) noexcept nogil:
    cdef cplx p = c[0]
    cdef int k
    for k in range(1, n):
        p = p * x + c[k]
    return p


cdef int _step(int method, const cplx* c, int n, const double* prm, cplx x, cplx* out) noexcept nogil:
    cdef cplx fx, dfx, y, fy, z, fz, u, t, s, w, den, num, D
    cdef cplx f_zy, f_yx, f_zyx, f_yxx, f_zyxx, f_xy, f_xz, f_yz, W, phi, psi
    cdef cplx Fy, Fz, zeta_y, zeta_z, d1, d2, u2, t2, H, J, P, fx2
    _horner(c, n, x, &fx, &dfx)
    if fx == 0:
        out[0] = x
        return ST_OK
    if dfx == 0:
        return ST_SINGULAR
    if method == 5:
        u = fx / dfx
        u2 = u * u
        y = x - u * (1 + u2 * u2 * u)
    else:
        u = fx / dfx
        y = x - u
    fy = _feval(c, n, y)
    if fy == 0:
        out[0] = y
        return ST_OK
    t = fy / fx

    if method == 1:
        if 1 + u == 0:
            return ST_SINGULAR
        w = 1 / (1 + u)
        z = x - u * (1 + t + (1 + w) * (t * t))
    elif method == 2 or method == 5:
        if 1 - t == 0:
            return ST_SINGULAR
        z = y - fy / dfx / ((1 - t) * (1 - t))
    elif method == 3:
        den = fx + (prm[0] - 2) * fy
        if den == 0:
            return ST_SINGULAR
        z = y - (fx + prm[0] * fy) / den * (fy / dfx)
    elif method == 4:
        den = fx - 2 * fy
        if den == 0:
            return ST_SINGULAR
        z = y - fy / dfx * (fx / den)
    else:
        den = fx + (prm[2] - 2) * fy
        if den == 0:
            return ST_SINGULAR
        z = y - fy / dfx * ((fx + prm[2] * fy) / den)

    fz = _feval(c, n, z)
    if fz == 0:
        out[0] = z
        return ST_OK

    if method == 1:
        if z - y == 0 or y - x == 0 or x - z == 0:
            return ST_SINGULAR
        f_zy = (fz - fy) / (z - y)
        f_yx = (fy - fx) / (y - x)
        f_zyx = (f_yx - f_zy) / (x - z)
        f_yxx = (dfx - f_yx) / (x - y)
        f_zyxx = (f_yxx - f_zyx) / (x - z)
        D = f_zy + (z - y) * f_zyx + (z - y) * (z - x) * f_zyxx
        if D == 0:
            return ST_SINGULAR
        out[0] = z - fz / D
    elif method == 2:
        s = fz / fx
        w = fz / fy
        H = -prm[4] - prm[5] + t + t * t / 2 - t * t * t / 2
        J = prm[4] + s / 2
        P = prm[5] + w / 2
        den = 1 - H - J - P
        if den == 0:
            return ST_SINGULAR
        out[0] = z - fz / dfx / (den * den)
    elif method == 3:
        Fy = fy - fx
        Fz = fz - fx
        if Fy == 0 or Fz == 0 or Fy - Fz == 0:
            return ST_SINGULAR
        zeta_y = ((y - x) / Fy - 1 / dfx) / Fy
        zeta_z = ((z - x) / Fz - 1 / dfx) / Fz
        d2 = -(zeta_y - zeta_z) / (Fy - Fz)
        d1 = zeta_y + d2 * Fy
        fx2 = fx * fx
        out[0] = y + d1 * fx2 + d2 * (fx2 * fx)
    elif method == 4:
        s = fz / fx
        if 1 + prm[1] * s == 0:
            return ST_SINGULAR
        W = 1 + s / (1 + prm[1] * s)
        if x - y == 0 or x - z == 0 or y - z == 0:
            return ST_SINGULAR
        f_xy = (fx - fy) / (x - y)
        f_xz = (fx - fz) / (x - z)
        f_yz = (fy - fz) / (y - z)
        if f_xz * f_yz == 0:
            return ST_SINGULAR
        out[0] = z - f_xy * fz / (f_xz * f_yz) * W
    elif method == 5:
        t2 = t * t
        num = 1 + t2 + 5 * (t2 * t2) + fz / fy
        den = 1 - t - fz / fx
        if den == 0:
            return ST_SINGULAR
        out[0] = z - fz / dfx * (num / (den * den))
    else:
        s = fz / fy
        w = fz / fx
        if 1 - 2 * t == 0:
            return ST_SINGULAR
        phi = 1 + t / (1 - 2 * t)
        phi = phi * phi
        if 1 - prm[3] * s == 0:
            return ST_SINGULAR
        psi = s / (1 - prm[3] * s)
        out[0] = z - fz / dfx * (phi + psi + 4 * w)
    return ST_OK


cdef inline int _nearest(const cplx* roots, int nroots, cplx z, double tol) noexcept nogil:
    cdef int r
    cdef cplx d
    for r in range(nroots):
        d = z - roots[r]
        if hypot(d.real, d.imag) < tol:
            return r
    return -1


def classify_grid(coeffs, roots, re, im, int method, params, int max_iter, double escape_tol):
    """Classify every ``(im[row], re[col])`` start point.

    Returns ``(root_index, iterations)`` arrays of shape ``(len(im), len(re))``;
    ``root_index`` is -1 for nonconvergent pixels.
    """
    cdef cplx[::1] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef cplx[::1] rts = np.ascontiguousarray(roots, dtype=np.complex128)
    cdef double[::1] xs = np.ascontiguousarray(re, dtype=np.float64)
    cdef double[::1] ys = np.ascontiguousarray(im, dtype=np.float64)
    cdef double[::1] prm = np.ascontiguousarray(params, dtype=np.float64)
    cdef Py_ssize_t H = ys.shape[0], Wd = xs.shape[0]
    out_idx = np.full((H, Wd), -1, dtype=np.int16)
    out_it = np.full((H, Wd), max_iter, dtype=np.int16)
    cdef short[:, ::1] idx = out_idx
    cdef short[:, ::1] its = out_it
    cdef int n = c.shape[0], nroots = rts.shape[0]
    cdef Py_ssize_t row, col
    cdef int k, r, st
    cdef cplx z, nxt
    if n == 0 or nroots == 0:
        raise ValueError("need coefficients and roots")
    with nogil:
        for row in prange(H, schedule="dynamic"):
            for col in range(Wd):
                z = xs[col] + 1j * ys[row]
                nxt = z
                for k in range(max_iter + 1):
                    if not _finite(z):
                        break
                    r = _nearest(&rts[0], nroots, z, escape_tol)
                    if r >= 0:
                        idx[row, col] = r
                        its[row, col] = k
                        break
                    if k == max_iter:
                        break
                    st = _step(method, &c[0], n, &prm[0], z, &nxt)
                    if st != ST_OK:
                        break
                    z = nxt
    return out_idx, out_it
