"""Shared cell-quadrature machinery: exact disk/cell overlaps, desingularized
convolution kernels and FFT convolution with a pinned thread count."""

from __future__ import annotations

import math
import os
from functools import lru_cache

import numpy as np
import scipy.fft

_THREADS = [max(1, int(os.environ.get("VORTEX_MOSER_THREADS", "1") or 1))]


def set_threads(n: int) -> None:
    """Cap the worker count used by the FFT convolutions."""
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _THREADS[0] = int(n)


def get_threads() -> int:
    return _THREADS[0]


# ---------------------------------------------------------------------------
# exact area of (axis-aligned rectangle) ∩ (disk centred at 0)


def _quadrant_area(a, b, R):
    # area of {0<=s<=a, 0<=t<=b, s^2+t^2<=R^2} for a, b >= 0
    a = np.minimum(a, R)
    b = np.minimum(b, R)
    inside = a * a + b * b <= R * R
    sb = np.sqrt(np.maximum(R * R - b * b, 0.0))

    def prim(s):
        s = np.clip(s, -R, R)
        return 0.5 * (s * np.sqrt(np.maximum(R * R - s * s, 0.0)) + R * R * np.arcsin(s / R))

    partial = b * sb + prim(a) - prim(sb)
    return np.where(inside, a * b, partial)


def _signed_area(x, y, R):
    return np.sign(x) * np.sign(y) * _quadrant_area(np.abs(x), np.abs(y), R)


def rect_disk_area(x0, x1, y0, y1, R):
    """Exact area of [x0,x1] x [y0,y1] ∩ B_R(0), vectorised."""
    return (
        _signed_area(x1, y1, R)
        - _signed_area(x0, y1, R)
        - _signed_area(x1, y0, R)
        + _signed_area(x0, y0, R)
    )


@lru_cache(maxsize=64)
def _disk_weights_cached(nx, ny, h, ox, oy, cx, cy, R):
    xs = ox + (np.arange(nx) - 0.5 * (nx - 1)) * h - cx
    ys = oy + (np.arange(ny) - 0.5 * (ny - 1)) * h - cy
    X, Y = np.meshgrid(xs, ys)
    w = rect_disk_area(X - 0.5 * h, X + 0.5 * h, Y - 0.5 * h, Y + 0.5 * h, R)
    # cells fully inside get exactly h^2; kills roundoff from the arcsin sums
    far = np.hypot(np.abs(X) + 0.5 * h, np.abs(Y) + 0.5 * h) <= R
    w = np.where(far, h * h, np.clip(w, 0.0, h * h))
    w.setflags(write=False)
    return w


def disk_weights(nx, ny, h, origin, center, R):
    return _disk_weights_cached(
        int(nx), int(ny), float(h), float(origin[0]), float(origin[1]),
        float(center[0]), float(center[1]), float(R),
    )


# ---------------------------------------------------------------------------
# desingularized kernels
#
# The self-cell value is the average of the kernel over a disk of the cell's
# area centred at the singularity.


def equal_area_radius(h: float) -> float:
    return h / math.sqrt(math.pi)


def log_kernel_self(h: float) -> float:
    """Cell average of (1/2pi) ln|z| over the equal-area disk."""
    rho = equal_area_radius(h)
    return (math.log(rho) - 0.5) / (2.0 * math.pi)


def riesz_kernel_self(h: float, beta: float) -> float:
    """Cell average of |z|^(beta-2) over the equal-area disk."""
    rho = equal_area_radius(h)
    return 2.0 * rho ** (beta - 2.0) / beta


def log_kernel(dx, dy):
    r = np.hypot(dx, dy)
    with np.errstate(divide="ignore"):
        return np.log(r) / (2.0 * np.pi)


def riesz_kernel(dx, dy, beta):
    r = np.hypot(dx, dy)
    with np.errstate(divide="ignore"):
        return r ** (beta - 2.0)


def _kernel_table(kind, nx, ny, h, beta=None):
    ix = np.arange(-(nx - 1), nx) * h
    iy = np.arange(-(ny - 1), ny) * h
    DX, DY = np.meshgrid(ix, iy)
    if kind == "log":
        K = log_kernel(DX, DY)
        K[ny - 1, nx - 1] = log_kernel_self(h)
    else:
        K = riesz_kernel(DX, DY, beta)
        K[ny - 1, nx - 1] = riesz_kernel_self(h, beta)
    return K


def convolve_on_grid(weighted, kind, h, beta=None):
    """out[i] = sum_j weighted[j] K(x_i - y_j) on the same cell-centred grid."""
    weighted = np.asarray(weighted, dtype=float)
    ny, nx = weighted.shape
    K = _kernel_table(kind, nx, ny, h, beta)
    shape = (scipy.fft.next_fast_len(3 * ny - 2, real=True),
             scipy.fft.next_fast_len(3 * nx - 2, real=True))
    w = get_threads()
    fa = scipy.fft.rfft2(weighted, shape, workers=w)
    fk = scipy.fft.rfft2(K, shape, workers=w)
    full = scipy.fft.irfft2(fa * fk, shape, workers=w)
    return full[ny - 1:2 * ny - 1, nx - 1:2 * nx - 1].copy()


def direct_sum(targets_x, targets_y, src_x, src_y, src_w, kernel, chunk=2048):
    """Sum over sources of src_w*kernel(target - source) for off-grid targets."""
    tx = np.ravel(targets_x)
    ty = np.ravel(targets_y)
    sx = np.ravel(src_x)
    sy = np.ravel(src_y)
    sw = np.ravel(src_w)
    keep = sw != 0.0
    sx, sy, sw = sx[keep], sy[keep], sw[keep]
    out = np.empty(tx.size)
    for start in range(0, tx.size, chunk):
        stop = min(start + chunk, tx.size)
        kv = kernel(tx[start:stop, None] - sx[None, :], ty[start:stop, None] - sy[None, :])
        out[start:stop] = kv @ sw
    return out.reshape(np.shape(targets_x))
