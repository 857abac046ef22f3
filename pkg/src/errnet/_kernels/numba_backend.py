"""Numba-jitted implementations of the hot kernels.

Same contracts as numpy_backend; serial @njit loops keep results
bit-deterministic run to run.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def conv2d_forward(xp, w, b, stride, dilation):
    # innermost loop runs over contiguous output columns so it vectorizes
    n, ci, hp, wp = xp.shape
    oc, _, kh, kw = w.shape
    oh = (hp - ((kh - 1) * dilation + 1)) // stride + 1
    ow = (wp - ((kw - 1) * dilation + 1)) // stride + 1
    y = np.empty((n, oc, oh, ow), dtype=xp.dtype)
    for nn in range(n):
        for o in range(oc):
            y[nn, o] = b[o]
        for c in range(ci):
            for o in range(oc):
                for u in range(kh):
                    for v in range(kw):
                        wv = w[o, c, u, v]
                        col = v * dilation
                        for i in range(oh):
                            r = i * stride + u * dilation
                            for j in range(ow):
                                y[nn, o, i, j] += wv * xp[nn, c, r, j * stride + col]
    return y


@njit(cache=True)
def conv2d_backward_input(gy, w, stride, dilation, hp, wp):
    n, oc, oh, ow = gy.shape
    _, ci, kh, kw = w.shape
    gxp = np.zeros((n, ci, hp, wp), dtype=gy.dtype)
    for nn in range(n):
        for c in range(ci):
            for o in range(oc):
                for u in range(kh):
                    for v in range(kw):
                        wv = w[o, c, u, v]
                        col = v * dilation
                        for i in range(oh):
                            r = i * stride + u * dilation
                            for j in range(ow):
                                gxp[nn, c, r, j * stride + col] += wv * gy[nn, o, i, j]
    return gxp


@njit(cache=True)
def conv2d_backward_kernel(gy, xp, stride, dilation, kh, kw):
    n, oc, oh, ow = gy.shape
    _, ci, _, _ = xp.shape
    gw = np.zeros((oc, ci, kh, kw), dtype=gy.dtype)
    for nn in range(n):
        for o in range(oc):
            for c in range(ci):
                for u in range(kh):
                    for v in range(kw):
                        col = v * dilation
                        acc = 0.0
                        for i in range(oh):
                            r = i * stride + u * dilation
                            for j in range(ow):
                                acc += gy[nn, o, i, j] * xp[nn, c, r, j * stride + col]
                        gw[o, c, u, v] += acc
    return gw


@njit(cache=True)
def avg_pool_forward(xp, k, stride):
    n, c, hp, wp = xp.shape
    oh = (hp - k) // stride + 1
    ow = (wp - k) // stride + 1
    inv = 1.0 / (k * k)
    y = np.empty((n, c, oh, ow), dtype=xp.dtype)
    for nn in range(n):
        for cc in range(c):
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0
                    for u in range(k):
                        for v in range(k):
                            acc += xp[nn, cc, i * stride + u, j * stride + v]
                    y[nn, cc, i, j] = acc * inv
    return y


@njit(cache=True)
def avg_pool_backward(gy, k, stride, hp, wp):
    n, c, oh, ow = gy.shape
    inv = 1.0 / (k * k)
    gxp = np.zeros((n, c, hp, wp), dtype=gy.dtype)
    for nn in range(n):
        for cc in range(c):
            for i in range(oh):
                for j in range(ow):
                    g = gy[nn, cc, i, j] * inv
                    for u in range(k):
                        for v in range(k):
                            gxp[nn, cc, i * stride + u, j * stride + v] += g
    return gxp


@njit(cache=True)
def bilinear_forward(x, oh, ow):
    n, c, ih, iw = x.shape
    sy = ih / oh
    sx = iw / ow
    y = np.empty((n, c, oh, ow), dtype=x.dtype)
    for i in range(oh):
        s = (i + 0.5) * sy - 0.5
        r0 = int(np.floor(s))
        t = s - r0
        ra = min(max(r0, 0), ih - 1)
        rb = min(max(r0 + 1, 0), ih - 1)
        for j in range(ow):
            u = (j + 0.5) * sx - 0.5
            c0 = int(np.floor(u))
            tt = u - c0
            ca = min(max(c0, 0), iw - 1)
            cb = min(max(c0 + 1, 0), iw - 1)
            w00 = (1.0 - t) * (1.0 - tt)
            w01 = (1.0 - t) * tt
            w10 = t * (1.0 - tt)
            w11 = t * tt
            for nn in range(n):
                for cc in range(c):
                    y[nn, cc, i, j] = (w00 * x[nn, cc, ra, ca] + w01 * x[nn, cc, ra, cb]
                                       + w10 * x[nn, cc, rb, ca] + w11 * x[nn, cc, rb, cb])
    return y


@njit(cache=True)
def bilinear_backward(gy, ih, iw):
    n, c, oh, ow = gy.shape
    sy = ih / oh
    sx = iw / ow
    gx = np.zeros((n, c, ih, iw), dtype=gy.dtype)
    for i in range(oh):
        s = (i + 0.5) * sy - 0.5
        r0 = int(np.floor(s))
        t = s - r0
        ra = min(max(r0, 0), ih - 1)
        rb = min(max(r0 + 1, 0), ih - 1)
        for j in range(ow):
            u = (j + 0.5) * sx - 0.5
            c0 = int(np.floor(u))
            tt = u - c0
            ca = min(max(c0, 0), iw - 1)
            cb = min(max(c0 + 1, 0), iw - 1)
            w00 = (1.0 - t) * (1.0 - tt)
            w01 = (1.0 - t) * tt
            w10 = t * (1.0 - tt)
            w11 = t * tt
            for nn in range(n):
                for cc in range(c):
                    g = gy[nn, cc, i, j]
                    gx[nn, cc, ra, ca] += w00 * g
                    gx[nn, cc, ra, cb] += w01 * g
                    gx[nn, cc, rb, ca] += w10 * g
                    gx[nn, cc, rb, cb] += w11 * g
    return gx


_EDT_INF = 1e9


@njit(cache=True)
def _dt1d_argmin(f, d, arg, v, z):
    n = f.shape[0]
    k = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) ** 2 + f[v[k]]
        arg[q] = v[k]


@njit(cache=True)
def edt_sq_indices(fg):
    # ties: upper row within a column, then smaller column along rows
    h, w = fg.shape
    d = np.empty((h, w), dtype=np.float64)
    row_src = np.zeros((h, w), dtype=np.int64)
    for i in range(h):
        for j in range(w):
            if fg[i, j]:
                d[i, j] = 0.0
                row_src[i, j] = i
            else:
                d[i, j] = _EDT_INF
    for i in range(1, h):
        for j in range(w):
            if d[i - 1, j] + 1.0 < d[i, j]:
                d[i, j] = d[i - 1, j] + 1.0
                row_src[i, j] = row_src[i - 1, j]
    for i in range(h - 2, -1, -1):
        for j in range(w):
            if d[i + 1, j] + 1.0 < d[i, j]:
                d[i, j] = d[i + 1, j] + 1.0
                row_src[i, j] = row_src[i + 1, j]
    out = np.empty((h, w), dtype=np.float64)
    rows = np.empty((h, w), dtype=np.int64)
    cols = np.empty((h, w), dtype=np.int64)
    f = np.empty(w, dtype=np.float64)
    drow = np.empty(w, dtype=np.float64)
    arg = np.empty(w, dtype=np.int64)
    v = np.zeros(w, dtype=np.int64)
    z = np.empty(w + 1, dtype=np.float64)
    for i in range(h):
        for j in range(w):
            f[j] = d[i, j] * d[i, j]
        _dt1d_argmin(f, drow, arg, v, z)
        for j in range(w):
            out[i, j] = drow[j]
            cols[i, j] = arg[j]
            rows[i, j] = row_src[i, arg[j]]
    return out, rows, cols


@njit(cache=True)
def edt_sq(fg):
    out, _, _ = edt_sq_indices(fg)
    return out
