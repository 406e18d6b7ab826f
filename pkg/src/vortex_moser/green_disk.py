"""Green function of the Laplacian on a disk and the two-part stream function.

With ``G >= 0`` vanishing on the circle, ``-Delta_x G = delta_y`` and

    phi = J1 + J2,   J1 = -int_dB dG/dnu phi dH^1,   J2 = -int_B G omega dy,

J1 is the harmonic extension of the boundary values and J2 solves
``Delta J2 = omega`` with ``J2 = 0`` on the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _quadrature as quad
from .fields import GridField2D, partial


@dataclass(frozen=True)
class DiskGreen:
    r: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("disk radius must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))


@dataclass(frozen=True)
class StreamDecomposition:
    J1: GridField2D
    J2: GridField2D
    phi: GridField2D


def _rel(g: DiskGreen, p):
    p = np.asarray(p, dtype=float)
    return p[..., 0] - g.center[0], p[..., 1] - g.center[1]


def _image_arg(g, x1, x2, y1, y2):
    # (|x|/r |y - x r^2/|x|^2|)^2, written without dividing by |x|
    rr = g.r * g.r
    return (x1 * x1 + x2 * x2) * (y1 * y1 + y2 * y2) / rr - 2.0 * (x1 * y1 + x2 * y2) + rr


def green_eval(g: DiskGreen, x, y):
    """G(x, y); at x = centre this reduces to (1/2pi) ln(r/|y|)."""
    x1, x2 = _rel(g, x)
    y1, y2 = _rel(g, y)
    tol = g.r * (1 + 1e-12)
    if np.any(np.hypot(x1, x2) > tol) or np.any(np.hypot(y1, y2) > tol):
        raise ValueError("point outside disk")
    d = np.hypot(x1 - y1, x2 - y2)
    if np.any(d == 0):
        raise ValueError("diagonal singularity")
    A = _image_arg(g, x1, x2, y1, y2)
    out = (0.5 * np.log(A) - np.log(d)) / (2.0 * math.pi)
    return float(out) if np.ndim(out) == 0 else out


def green_grad_x(g: DiskGreen, x, y):
    """Gradient of G in its first argument, shape (..., 2)."""
    x1, x2 = _rel(g, x)
    y1, y2 = _rel(g, y)
    rr = g.r * g.r
    A = _image_arg(g, x1, x2, y1, y2)
    yy = y1 * y1 + y2 * y2
    d2 = (x1 - y1) ** 2 + (x2 - y2) ** 2
    g1 = ((x1 * yy / rr - y1) / A - (x1 - y1) / d2) / (2.0 * math.pi)
    g2 = ((x2 * yy / rr - y2) / A - (x2 - y2) / d2) / (2.0 * math.pi)
    return np.stack([g1, g2], axis=-1)


def poisson_kernel(g: DiskGreen, x, theta):
    """-dG/dnu at r e^{i theta}: (r^2 - |x|^2) / (2 pi r |x - y|^2)."""
    x1, x2 = _rel(g, x)
    y1, y2 = g.r * np.cos(theta), g.r * np.sin(theta)
    return (g.r ** 2 - x1 * x1 - x2 * x2) / (2 * math.pi * g.r * ((x1 - y1) ** 2 + (x2 - y2) ** 2))


def boundary_angles(n: int) -> np.ndarray:
    return 2.0 * math.pi * np.arange(n) / n


def _smoothed_log(h):
    # ln averaged over the equal-area disk of each source cell; equals ln d off the disk
    rho2 = quad.equal_area_radius(h) ** 2

    def kernel(dx, dy):
        d2 = dx * dx + dy * dy
        return (0.5 * np.log(np.maximum(d2, rho2)) + 0.5 * np.minimum(d2 / rho2 - 1.0, 0.0)) / (2 * math.pi)

    return kernel


def _check_disk_field(g: DiskGreen, f: GridField2D):
    if f.mask_radius is None:
        raise ValueError("unmasked field: vorticity must be masked to the disk")
    if not math.isclose(f.mask_radius, g.r, rel_tol=1e-12) or f.origin != g.center:
        raise ValueError("field mask must coincide with the Green function's disk")


def _harmonic_extension(g: DiskGreen, values: np.ndarray, X, Y) -> np.ndarray:
    """Poisson integral of equispaced boundary samples, summed as the
    Fourier-truncated kernel (exact for trigonometric data up to Nyquist)."""
    vals = np.asarray(values, dtype=float)
    n = vals.size
    c = np.fft.fft(vals) / n
    z = ((X - g.center[0]) + 1j * (Y - g.center[1])) / g.r
    top = n // 2
    acc = np.zeros(z.shape, dtype=complex)
    # Horner over modes top..1
    for m in range(top, 0, -1):
        coef = c[m] if (n % 2 == 0 and m == top) else 2.0 * c[m]
        acc = (acc + coef) * z
    return c[0].real + acc.real


def boundary_term(g: DiskGreen, phi_boundary, like: GridField2D) -> GridField2D:
    """J1 on the grid of ``like``: harmonic, matching the boundary samples.

    ``phi_boundary[k]`` is the value at angle 2 pi k / n.
    """
    vals = np.asarray(phi_boundary, dtype=float).ravel()
    if vals.size < 16:
        raise ValueError("need at least 16 boundary samples")
    X, Y = like.coords()
    inside = np.hypot(X - g.center[0], Y - g.center[1]) < g.r
    J1 = np.where(inside, _harmonic_extension(g, vals, np.where(inside, X, g.center[0]),
                                              np.where(inside, Y, g.center[1])), 0.0)
    return GridField2D(J1, like.h, like.origin, g.r)


def default_boundary_count(f: GridField2D) -> int:
    n = max(64, max(f.nx, f.ny))
    return n + (n % 2)


def log_potential(omega: GridField2D) -> np.ndarray:
    """(1/2pi) int ln|x - y| omega(y) dy on the grid (FFT, desingularized)."""
    a = omega.weights() * omega.data
    return quad.convolve_on_grid(a, "log", omega.h)


def log_potential_at(omega: GridField2D, px, py) -> np.ndarray:
    X, Y = omega.coords()
    a = omega.weights() * omega.data
    return quad.direct_sum(px, py, X, Y, a, _smoothed_log(omega.h))


def poisson_solve_disk(g: DiskGreen, omega: GridField2D, n_boundary: int | None = None) -> GridField2D:
    """J2 = -int_B G(x, y) omega(y) dy, i.e. Delta J2 = omega, J2 = 0 on the circle.

    Evaluated as the free-space log potential minus the harmonic extension of
    its boundary trace; by symmetry of G this is the image term of the kernel.
    """
    _check_disk_field(g, omega)
    if omega.components != 1:
        raise ValueError("vorticity must be scalar")
    nb = n_boundary or default_boundary_count(omega)
    th = boundary_angles(nb)
    N = log_potential(omega)
    trace = log_potential_at(omega, g.center[0] + g.r * np.cos(th), g.center[1] + g.r * np.sin(th))
    X, Y = omega.coords()
    inside = omega.inside()
    H = _harmonic_extension(g, trace, np.where(inside, X, g.center[0]), np.where(inside, Y, g.center[1]))
    return omega.with_data(np.where(inside, N - H, 0.0))


def volume_potential_direct(g: DiskGreen, omega: GridField2D) -> GridField2D:
    """J2 by direct O(N^2) summation of the Green kernel (reference path)."""
    _check_disk_field(g, omega)
    X, Y = omega.coords()
    inside = omega.inside()
    a = omega.weights() * omega.data
    keep = a != 0
    sx, sy, sa = X[keep], Y[keep], a[keep]
    tx, ty = X[inside], Y[inside]
    slog = _smoothed_log(omega.h)
    out = np.empty(tx.size)
    for s in range(0, tx.size, 1024):
        e = slice(s, s + 1024)
        x1 = tx[e, None] - g.center[0]
        x2 = ty[e, None] - g.center[1]
        y1 = sx[None, :] - g.center[0]
        y2 = sy[None, :] - g.center[1]
        G = 0.5 * np.log(_image_arg(g, x1, x2, y1, y2)) / (2 * math.pi) - slog(x1 - y1, x2 - y2)
        out[e] = -(G @ sa)
    J2 = np.zeros(X.shape)
    J2[inside] = out
    return omega.with_data(J2)


def decompose(g: DiskGreen, omega: GridField2D, phi_boundary) -> StreamDecomposition:
    J2 = poisson_solve_disk(g, omega)
    J1 = boundary_term(g, phi_boundary, omega)
    return StreamDecomposition(J1, J2, J1.with_data(J1.data + J2.data))


def stream_to_velocity(phi: GridField2D) -> GridField2D:
    """u = (-d phi/dx2, d phi/dx1) by central differences (one-sided at the rim)."""
    if phi.nx < 3 or phi.ny < 3:
        raise ValueError("need at least 3 cells per axis")
    valid = phi.inside()
    u1 = -partial(phi.data, phi.h, 0, valid)
    u2 = partial(phi.data, phi.h, 1, valid)
    return phi.with_data(np.stack([u1, u2], axis=-1))
