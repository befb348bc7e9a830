"""Pure-numpy basin classifier with the same semantics as the compiled kernel.

Each step is evaluated on the whole active set at once. Per-element early
exits (``f`` vanishing at x, y or z) and singular denominators are tracked
with masks so that every element follows the same decision order as the
scalar step.
"""

from __future__ import annotations

import numpy as np


def _horner(c, x):
    p = np.full_like(x, c[0])
    dp = np.zeros_like(x)
    for a in c[1:]:
        dp = dp * x + p
        p = p * x + a
    return p, dp


def _feval(c, x):
    p = np.full_like(x, c[0])
    for a in c[1:]:
        p = p * x + a
    return p


class _Outcome:
    """Per-element resolution state for one vectorized step."""

    def __init__(self, n):
        self.out = np.empty(n, dtype=np.complex128)
        self.settled = np.zeros(n, dtype=bool)
        self.singular = np.zeros(n, dtype=bool)

    def finish(self, mask, value):
        m = mask & ~self.settled
        self.out[m] = value[m]
        self.settled |= m

    def fail(self, mask):
        m = mask & ~self.settled
        self.singular |= m
        self.settled |= m

    def rest(self, value):
        m = ~self.settled
        self.out[m] = value[m]


def _step(method, c, prm, x):
    A, alpha4, beta6, alpha6, beta2, gamma2 = prm
    o = _Outcome(x.shape[0])
    fx, dfx = _horner(c, x)
    o.finish(fx == 0, x)
    o.fail(dfx == 0)
    u = fx / dfx
    if method == 5:
        u2 = u * u
        y = x - u * (1 + u2 * u2 * u)
    else:
        y = x - u
    fy = _feval(c, y)
    o.finish(fy == 0, y)
    t = fy / fx

    if method == 1:
        o.fail(1 + u == 0)
        w = 1 / (1 + u)
        z = x - u * (1 + t + (1 + w) * (t * t))
    elif method in (2, 5):
        o.fail(1 - t == 0)
        z = y - fy / dfx / ((1 - t) * (1 - t))
    elif method == 3:
        den = fx + (A - 2) * fy
        o.fail(den == 0)
        z = y - (fx + A * fy) / den * (fy / dfx)
    elif method == 4:
        den = fx - 2 * fy
        o.fail(den == 0)
        z = y - fy / dfx * (fx / den)
    else:
        den = fx + (beta6 - 2) * fy
        o.fail(den == 0)
        z = y - fy / dfx * ((fx + beta6 * fy) / den)

    fz = _feval(c, z)
    o.finish(fz == 0, z)

    if method == 1:
        o.fail((z - y == 0) | (y - x == 0) | (x - z == 0))
        f_zy = (fz - fy) / (z - y)
        f_yx = (fy - fx) / (y - x)
        f_zyx = (f_yx - f_zy) / (x - z)
        f_yxx = (dfx - f_yx) / (x - y)
        f_zyxx = (f_yxx - f_zyx) / (x - z)
        D = f_zy + (z - y) * f_zyx + (z - y) * (z - x) * f_zyxx
        o.fail(D == 0)
        nxt = z - fz / D
    elif method == 2:
        s = fz / fx
        w = fz / fy
        H = -beta2 - gamma2 + t + t * t / 2 - t * t * t / 2
        J = beta2 + s / 2
        P = gamma2 + w / 2
        den = 1 - H - J - P
        o.fail(den == 0)
        nxt = z - fz / dfx / (den * den)
    elif method == 3:
        Fy = fy - fx
        Fz = fz - fx
        o.fail((Fy == 0) | (Fz == 0) | (Fy - Fz == 0))
        zeta_y = ((y - x) / Fy - 1 / dfx) / Fy
        zeta_z = ((z - x) / Fz - 1 / dfx) / Fz
        d2 = -(zeta_y - zeta_z) / (Fy - Fz)
        d1 = zeta_y + d2 * Fy
        fx2 = fx * fx
        nxt = y + d1 * fx2 + d2 * (fx2 * fx)
    elif method == 4:
        s = fz / fx
        o.fail(1 + alpha4 * s == 0)
        W = 1 + s / (1 + alpha4 * s)
        o.fail((x - y == 0) | (x - z == 0) | (y - z == 0))
        f_xy = (fx - fy) / (x - y)
        f_xz = (fx - fz) / (x - z)
        f_yz = (fy - fz) / (y - z)
        o.fail(f_xz * f_yz == 0)
        nxt = z - f_xy * fz / (f_xz * f_yz) * W
    elif method == 5:
        t2 = t * t
        num = 1 + t2 + 5 * (t2 * t2) + fz / fy
        den = 1 - t - fz / fx
        o.fail(den == 0)
        nxt = z - fz / dfx * (num / (den * den))
    else:
        s = fz / fy
        w = fz / fx
        o.fail(1 - 2 * t == 0)
        phi = 1 + t / (1 - 2 * t)
        phi = phi * phi
        o.fail(1 - alpha6 * s == 0)
        psi = s / (1 - alpha6 * s)
        nxt = z - fz / dfx * (phi + psi + 4 * w)
    o.rest(nxt)
    return o.out, ~o.singular


def classify_grid(coeffs, roots, re, im, method, params, max_iter, escape_tol):
    """Classify every ``(im[row], re[col])`` start point.

    Returns ``(root_index, iterations)`` arrays of shape ``(len(im), len(re))``;
    ``root_index`` is -1 for nonconvergent pixels.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    rts = np.asarray(roots, dtype=np.complex128)
    if c.size == 0 or rts.size == 0:
        raise ValueError("need coefficients and roots")
    prm = tuple(float(v) for v in params)
    xs = np.asarray(re, dtype=np.float64)
    ys = np.asarray(im, dtype=np.float64)
    H, W = ys.shape[0], xs.shape[0]
    z = (xs[None, :] + 1j * ys[:, None]).ravel()
    idx = np.full(z.shape, -1, dtype=np.int16)
    its = np.full(z.shape, max_iter, dtype=np.int16)
    live = np.arange(z.shape[0])
    with np.errstate(all="ignore"):
        for k in range(max_iter + 1):
            zl = z[live]
            keep = np.isfinite(zl)
            live, zl = live[keep], zl[keep]
            hit = np.full(live.shape, -1, dtype=np.int16)
            # first root in list order wins, as in the scalar scan
            for r in range(rts.shape[0] - 1, -1, -1):
                d = zl - rts[r]
                hit[np.hypot(d.real, d.imag) < escape_tol] = r
            found = hit >= 0
            idx[live[found]] = hit[found]
            its[live[found]] = k
            live, zl = live[~found], zl[~found]
            if k == max_iter or live.size == 0:
                break
            nxt, ok = _step(method, c, prm, zl)
            live = live[ok]
            z[live] = nxt[ok]
    return idx.reshape(H, W), its.reshape(H, W)
