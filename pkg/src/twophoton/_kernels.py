"""Hot numeric kernels with numba and pure-numpy implementations.

Coordinate convention shared by every kernel: output pixel ``(r, c)`` samples
the source at the inverse-mapped location obtained by rotating
``(r - cr, c - cc)`` by ``-theta`` about the image centre
``(cr, cc) = ((R - 1) / 2, (C - 1) / 2)`` and then subtracting ``(dy, dx)``.
Rotation acts on ``(x=col, y=row)`` with the usual counter-clockwise matrix.

A sample is valid when its source location lies inside ``[0, R-1] x [0, C-1]``
(up to ``_EDGE_EPS``); neighbours that receive zero bilinear weight are never
read, so exact integer locations on the last row/column stay valid.

The public dispatchers at the bottom pick the numba or numpy variant based on
:data:`twophoton._accel.USE_NUMBA`. Both variants are importable directly for
parity tests and benchmarks.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

_EDGE_EPS = 1e-9


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _sample_nb(frame, ys, xs):
    """Bilinear sample; returns (value, valid)."""
    R, C = frame.shape
    if ys < -_EDGE_EPS or ys > R - 1 + _EDGE_EPS or xs < -_EDGE_EPS or xs > C - 1 + _EDGE_EPS:
        return 0.0, False
    y0 = int(math.floor(ys))
    x0 = int(math.floor(xs))
    if y0 < 0:
        y0 = 0
    if x0 < 0:
        x0 = 0
    if y0 > R - 1:
        y0 = R - 1
    if x0 > C - 1:
        x0 = C - 1
    fy = ys - y0
    fx = xs - x0
    if fy < 0.0:
        fy = 0.0
    if fx < 0.0:
        fx = 0.0
    y1 = y0 + 1 if y0 + 1 < R else y0
    x1 = x0 + 1 if x0 + 1 < C else x0
    if y1 == y0:
        fy = 0.0
    if x1 == x0:
        fx = 0.0
    top = frame[y0, x0] * (1.0 - fx) + frame[y0, x1] * fx
    bot = frame[y1, x0] * (1.0 - fx) + frame[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy, True


@njit(cache=True, nogil=True)
def _warp_nb(frame, dx, dy, theta):
    R, C = frame.shape
    cr = (R - 1) / 2.0
    cc = (C - 1) / 2.0
    ct = math.cos(theta)
    st = math.sin(theta)
    out = np.zeros((R, C), dtype=np.float64)
    mask = np.zeros((R, C), dtype=np.bool_)
    for r in range(R):
        y = r - cr
        for c in range(C):
            x = c - cc
            xs = ct * x + st * y + cc - dx
            ys = -st * x + ct * y + cr - dy
            v, ok = _sample_nb(frame, ys, xs)
            if ok:
                out[r, c] = v
                mask[r, c] = True
    return out, mask


@njit(cache=True, nogil=True)
def _warp_sse_nb(frame, ref, dx, dy, theta):
    """Sum of squared residuals over valid pixels and the valid count."""
    R, C = frame.shape
    cr = (R - 1) / 2.0
    cc = (C - 1) / 2.0
    ct = math.cos(theta)
    st = math.sin(theta)
    acc = 0.0
    n = 0
    for r in range(R):
        y = r - cr
        for c in range(C):
            x = c - cc
            xs = ct * x + st * y + cc - dx
            ys = -st * x + ct * y + cr - dy
            v, ok = _sample_nb(frame, ys, xs)
            if ok:
                d = v - ref[r, c]
                acc += d * d
                n += 1
    return acc, n


@njit(cache=True, nogil=True)
def _grid_sse_nb(frame, ref, max_shift, min_valid):
    """Mean squared error for every integer shift in [-max_shift, max_shift]^2 at theta=0.

    Returns a (2*max_shift+1, 2*max_shift+1) array indexed [dy, dx]; entries with
    fewer than ``min_valid`` valid pixels are +inf.
    """
    # at theta=0 and integer shifts the warp is an exact offset, no interpolation
    R, C = frame.shape
    n_side = 2 * max_shift + 1
    out = np.full((n_side, n_side), np.inf)
    for iy in range(n_side):
        sy = iy - max_shift
        r_lo = max(0, sy)
        r_hi = min(R, R + sy)
        for ix in range(n_side):
            sx = ix - max_shift
            c_lo = max(0, sx)
            c_hi = min(C, C + sx)
            if r_hi <= r_lo or c_hi <= c_lo:
                continue
            n = (r_hi - r_lo) * (c_hi - c_lo)
            if n < min_valid:
                continue
            acc = 0.0
            for r in range(r_lo, r_hi):
                for c in range(c_lo, c_hi):
                    d = frame[r - sy, c - sx] - ref[r, c]
                    acc += d * d
            out[iy, ix] = acc / n
    return out


@njit(cache=True, nogil=True)
def _render_blobs_nb(rows, cols, centers, amplitudes, sigma, dx, dy, theta, base):
    """Evaluate ``base + sum_k amp_k * exp(-d_k^2 / 2 sigma^2)`` at scene locations.

    Pixel ``q`` of the output shows the scene at ``R(theta) (q + d - c) + c``,
    so warping the output with ``(dx, dy, theta)`` restores the scene.
    """
    cr = (rows - 1) / 2.0
    cc = (cols - 1) / 2.0
    ct = math.cos(theta)
    st = math.sin(theta)
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    out = np.empty((rows, cols), dtype=np.float64)
    n_cells = centers.shape[0]
    for r in range(rows):
        y = r + dy - cr
        for c in range(cols):
            x = c + dx - cc
            px = ct * x - st * y + cc
            py = st * x + ct * y + cr
            acc = base
            for k in range(n_cells):
                ddy = py - centers[k, 0]
                ddx = px - centers[k, 1]
                acc += amplitudes[k] * math.exp(-(ddx * ddx + ddy * ddy) * inv2s2)
            out[r, c] = acc
    return out


# ---------------------------------------------------------------------------
# numpy kernels
# ---------------------------------------------------------------------------


def _source_coords(R, C, dx, dy, theta):
    cr = (R - 1) / 2.0
    cc = (C - 1) / 2.0
    ct = math.cos(theta)
    st = math.sin(theta)
    y = (np.arange(R, dtype=np.float64) - cr)[:, None]
    x = (np.arange(C, dtype=np.float64) - cc)[None, :]
    xs = ct * x + st * y + cc - dx
    ys = -st * x + ct * y + cr - dy
    return ys, xs


def _sample_np(frame, ys, xs):
    R, C = frame.shape
    valid = (ys >= -_EDGE_EPS) & (ys <= R - 1 + _EDGE_EPS) & (xs >= -_EDGE_EPS) & (xs <= C - 1 + _EDGE_EPS)
    y0 = np.clip(np.floor(ys), 0, R - 1).astype(np.intp)
    x0 = np.clip(np.floor(xs), 0, C - 1).astype(np.intp)
    fy = np.maximum(ys - y0, 0.0)
    fx = np.maximum(xs - x0, 0.0)
    y1 = np.minimum(y0 + 1, R - 1)
    x1 = np.minimum(x0 + 1, C - 1)
    fy = np.where(y1 == y0, 0.0, fy)
    fx = np.where(x1 == x0, 0.0, fx)
    f = np.asarray(frame, dtype=np.float64)
    top = f[y0, x0] * (1.0 - fx) + f[y0, x1] * fx
    bot = f[y1, x0] * (1.0 - fx) + f[y1, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    return np.where(valid, out, 0.0), valid


def _warp_np(frame, dx, dy, theta):
    R, C = frame.shape
    ys, xs = _source_coords(R, C, dx, dy, theta)
    ys, xs = np.broadcast_arrays(ys, xs)
    return _sample_np(frame, ys, xs)


def _warp_sse_np(frame, ref, dx, dy, theta):
    out, mask = _warp_np(frame, dx, dy, theta)
    d = out[mask] - np.asarray(ref, dtype=np.float64)[mask]
    return float(np.dot(d, d)), int(mask.sum())


def _grid_sse_np(frame, ref, max_shift, min_valid):
    # at theta=0 and integer shifts the warp is an exact slice
    f = np.asarray(frame, dtype=np.float64)
    g = np.asarray(ref, dtype=np.float64)
    R, C = f.shape
    n_side = 2 * max_shift + 1
    out = np.full((n_side, n_side), np.inf)
    for iy in range(n_side):
        sy = iy - max_shift
        r_lo, r_hi = max(0, sy), min(R, R + sy)
        for ix in range(n_side):
            sx = ix - max_shift
            c_lo, c_hi = max(0, sx), min(C, C + sx)
            if r_hi <= r_lo or c_hi <= c_lo:
                continue
            n = (r_hi - r_lo) * (c_hi - c_lo)
            if n < min_valid:
                continue
            d = f[r_lo - sy:r_hi - sy, c_lo - sx:c_hi - sx] - g[r_lo:r_hi, c_lo:c_hi]
            out[iy, ix] = float(np.sum(d * d)) / n
    return out


def _render_blobs_np(rows, cols, centers, amplitudes, sigma, dx, dy, theta, base):
    cr = (rows - 1) / 2.0
    cc = (cols - 1) / 2.0
    ct = math.cos(theta)
    st = math.sin(theta)
    y = (np.arange(rows, dtype=np.float64) + dy - cr)[:, None]
    x = (np.arange(cols, dtype=np.float64) + dx - cc)[None, :]
    px = ct * x - st * y + cc
    py = st * x + ct * y + cr
    out = np.full((rows, cols), float(base))
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    for k in range(centers.shape[0]):
        d2 = (px - centers[k, 1]) ** 2 + (py - centers[k, 0]) ** 2
        out += amplitudes[k] * np.exp(-d2 * inv2s2)
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def warp(frame, dx, dy, theta):
    frame = np.ascontiguousarray(frame, dtype=np.float64)
    if USE_NUMBA:
        return _warp_nb(frame, float(dx), float(dy), float(theta))
    return _warp_np(frame, dx, dy, theta)


def warp_sse(frame, ref, dx, dy, theta):
    frame = np.ascontiguousarray(frame, dtype=np.float64)
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    if USE_NUMBA:
        acc, n = _warp_sse_nb(frame, ref, float(dx), float(dy), float(theta))
        return float(acc), int(n)
    return _warp_sse_np(frame, ref, dx, dy, theta)


def grid_sse(frame, ref, max_shift, min_valid):
    frame = np.ascontiguousarray(frame, dtype=np.float64)
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    if USE_NUMBA:
        return _grid_sse_nb(frame, ref, int(max_shift), int(min_valid))
    return _grid_sse_np(frame, ref, int(max_shift), int(min_valid))


def render_blobs(rows, cols, centers, amplitudes, sigma, dx=0.0, dy=0.0, theta=0.0, base=0.0):
    centers = np.ascontiguousarray(centers, dtype=np.float64).reshape(-1, 2)
    amplitudes = np.ascontiguousarray(amplitudes, dtype=np.float64).reshape(-1)
    if USE_NUMBA:
        return _render_blobs_nb(int(rows), int(cols), centers, amplitudes, float(sigma),
                                float(dx), float(dy), float(theta), float(base))
    return _render_blobs_np(rows, cols, centers, amplitudes, sigma, dx, dy, theta, base)
