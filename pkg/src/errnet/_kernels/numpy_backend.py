"""Pure-numpy implementations of the hot kernels.

Reference semantics for the numba backend; selected with ERRNET_BACKEND=numpy.
All functions take and return plain float64 ndarrays and know nothing about
the autodiff tape.
"""

import numpy as np


def _out_extent(size, ksize, stride, dilation):
    eff = (ksize - 1) * dilation + 1
    return (size - eff) // stride + 1


def _im2col(xp, kh, kw, stride, dilation, oh, ow):
    n, c, _, _ = xp.shape
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=xp.dtype)
    for u in range(kh):
        for v in range(kw):
            r0 = u * dilation
            c0 = v * dilation
            cols[:, :, u, v] = xp[:, :, r0:r0 + stride * (oh - 1) + 1:stride,
                                  c0:c0 + stride * (ow - 1) + 1:stride]
    return cols


def conv2d_forward(xp, w, b, stride, dilation):
    """Dilated cross-correlation on a pre-padded input.

    xp: (N, C, Hp, Wp), w: (O, C, kh, kw), b: (O,).
    """
    _, _, hp, wp = xp.shape
    oc, _, kh, kw = w.shape
    oh = _out_extent(hp, kh, stride, dilation)
    ow = _out_extent(wp, kw, stride, dilation)
    cols = _im2col(xp, kh, kw, stride, dilation, oh, ow)
    y = np.einsum("ncuvij,ocuv->noij", cols, w, optimize=True)
    y += b[None, :, None, None]
    return y


def conv2d_backward_input(gy, w, stride, dilation, hp, wp):
    n, _, oh, ow = gy.shape
    _, ci, kh, kw = w.shape
    gxp = np.zeros((n, ci, hp, wp), dtype=gy.dtype)
    gcols = np.einsum("noij,ocuv->ncuvij", gy, w, optimize=True)
    for u in range(kh):
        for v in range(kw):
            r0 = u * dilation
            c0 = v * dilation
            gxp[:, :, r0:r0 + stride * (oh - 1) + 1:stride,
                c0:c0 + stride * (ow - 1) + 1:stride] += gcols[:, :, u, v]
    return gxp


def conv2d_backward_kernel(gy, xp, stride, dilation, kh, kw):
    _, _, oh, ow = gy.shape
    cols = _im2col(xp, kh, kw, stride, dilation, oh, ow)
    return np.einsum("noij,ncuvij->ocuv", gy, cols, optimize=True)


def avg_pool_forward(xp, k, stride):
    """Mean over k*k windows of a pre-padded input, dividing by the full
    window area (padding counts as zeros)."""
    n, c, hp, wp = xp.shape
    oh = (hp - k) // stride + 1
    ow = (wp - k) // stride + 1
    y = np.zeros((n, c, oh, ow), dtype=xp.dtype)
    for u in range(k):
        for v in range(k):
            y += xp[:, :, u:u + stride * (oh - 1) + 1:stride,
                    v:v + stride * (ow - 1) + 1:stride]
    y /= float(k * k)
    return y


def avg_pool_backward(gy, k, stride, hp, wp):
    n, c, oh, ow = gy.shape
    gxp = np.zeros((n, c, hp, wp), dtype=gy.dtype)
    g = gy / float(k * k)
    for u in range(k):
        for v in range(k):
            gxp[:, :, u:u + stride * (oh - 1) + 1:stride,
                v:v + stride * (ow - 1) + 1:stride] += g
    return gxp


def _resize_axis_coords(in_size, out_size):
    s = (np.arange(out_size, dtype=np.float64) + 0.5) * (in_size / out_size) - 0.5
    i0 = np.floor(s).astype(np.int64)
    t = s - i0
    lo = np.clip(i0, 0, in_size - 1)
    hi = np.clip(i0 + 1, 0, in_size - 1)
    return lo, hi, t


def bilinear_forward(x, oh, ow):
    """Align-corners-false bilinear resampling."""
    _, _, ih, iw = x.shape
    r0, r1, t = _resize_axis_coords(ih, oh)
    c0, c1, u = _resize_axis_coords(iw, ow)
    ty = t[:, None]
    tx = u[None, :]
    top = x[:, :, r0, :]
    bot = x[:, :, r1, :]
    return ((1.0 - ty) * (1.0 - tx) * top[:, :, :, c0]
            + (1.0 - ty) * tx * top[:, :, :, c1]
            + ty * (1.0 - tx) * bot[:, :, :, c0]
            + ty * tx * bot[:, :, :, c1])


def bilinear_backward(gy, ih, iw):
    n, c, oh, ow = gy.shape
    r0, r1, t = _resize_axis_coords(ih, oh)
    c0, c1, u = _resize_axis_coords(iw, ow)
    ty = t[:, None]
    tx = u[None, :]
    acc = np.zeros((ih * iw, n, c), dtype=gy.dtype)
    gperm = gy.transpose(2, 3, 0, 1)
    for rows, cols, wgt in (
        (r0, c0, (1.0 - ty) * (1.0 - tx)),
        (r0, c1, (1.0 - ty) * tx),
        (r1, c0, ty * (1.0 - tx)),
        (r1, c1, ty * tx),
    ):
        flat = (rows[:, None] * iw + cols[None, :]).reshape(-1)
        np.add.at(acc, flat, (gperm * wgt[:, :, None, None]).reshape(oh * ow, n, c))
    return acc.reshape(ih, iw, n, c).transpose(2, 3, 0, 1)


_EDT_INF = 1e9


def _dt1d_argmin(f):
    """Lower-envelope 1-D squared distance transform returning, per
    position, the minimising source column; exact ties go to the smaller
    column (strict advance over interval boundaries)."""
    n = f.shape[0]
    d = np.empty(n, dtype=np.float64)
    arg = np.empty(n, dtype=np.int64)
    v = np.zeros(n, dtype=np.int64)
    z = np.empty(n + 1, dtype=np.float64)
    k = 0
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
    return d, arg


def edt_sq_indices(fg):
    """Squared Euclidean distance to the nearest True pixel plus that
    pixel's coordinates.

    Two-pass exact transform: per-column nearest-row sweep (upper row wins
    ties), then a lower-envelope pass along rows (smaller column wins
    ties). fg must contain at least one True pixel.
    """
    fg = fg.astype(bool)
    h, w = fg.shape
    d = np.full((h, w), _EDT_INF, dtype=np.float64)
    row_src = np.zeros((h, w), dtype=np.int64)
    d[fg] = 0.0
    for i in range(h):
        row_src[i, fg[i]] = i
    for i in range(1, h):
        closer = d[i - 1] + 1.0 < d[i]
        d[i, closer] = d[i - 1, closer] + 1.0
        row_src[i, closer] = row_src[i - 1, closer]
    for i in range(h - 2, -1, -1):
        closer = d[i + 1] + 1.0 < d[i]
        d[i, closer] = d[i + 1, closer] + 1.0
        row_src[i, closer] = row_src[i + 1, closer]
    d *= d
    out = np.empty((h, w), dtype=np.float64)
    rows = np.empty((h, w), dtype=np.int64)
    cols = np.empty((h, w), dtype=np.int64)
    for i in range(h):
        out[i], arg = _dt1d_argmin(d[i])
        cols[i] = arg
        rows[i] = row_src[i, arg]
    return out, rows, cols


def edt_sq(fg):
    return edt_sq_indices(fg)[0]
