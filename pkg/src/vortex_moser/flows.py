"""Radial stationary vortices and a small semi-Lagrangian vorticity stepper."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special
from scipy.ndimage import map_coordinates

from .fields import Cylinder, GridField2D, SpaceTimeField, partial
from .biot_savart import reconstruct_velocity

LOG_EXAMPLE_RADIUS = 0.5


@dataclass(frozen=True)
class RadialVorticity:
    """omega depending on |x - origin| only.

    kinds: ``rankine`` (omega0, a), ``lamb_oseen`` (circulation, nu, t),
    ``log_example`` (1/(s ln(1/s)) for s <= 1/2, zero beyond) and ``custom``
    (a vectorized callable of s).
    """

    kind: str
    omega0: float = 1.0
    a: float = 0.5
    circulation: float = 1.0
    nu: float = 0.005
    t: float = 1.0
    fn: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("rankine", "lamb_oseen", "log_example", "custom"):
            raise ValueError(f"unknown radial vorticity kind {self.kind!r}")
        if self.kind == "rankine" and not self.a > 0:
            raise ValueError("core radius must be positive")
        if self.kind == "lamb_oseen" and not (self.nu > 0 and self.t > 0):
            raise ValueError("need nu > 0 and t > 0")
        if self.kind == "custom" and self.fn is None:
            raise ValueError("custom vorticity needs a callable")

    @classmethod
    def rankine(cls, omega0=1.0, a=0.5):
        return cls("rankine", omega0=omega0, a=a)

    @classmethod
    def lamb_oseen(cls, circulation=1.0, nu=0.005, t=1.0):
        return cls("lamb_oseen", circulation=circulation, nu=nu, t=t)

    @classmethod
    def log_example(cls):
        return cls("log_example")

    @classmethod
    def custom(cls, fn):
        return cls("custom", fn=fn)

    @property
    def core(self) -> float:
        return 4.0 * self.nu * self.t

    def omega(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "rankine":
            return np.where(s < self.a, self.omega0, 0.0)
        if self.kind == "lamb_oseen":
            return self.circulation / (math.pi * self.core) * np.exp(-s * s / self.core)
        if self.kind == "log_example":
            with np.errstate(divide="ignore"):
                val = 1.0 / (s * np.log(1.0 / s))
            return np.where((s > 0) & (s <= LOG_EXAMPLE_RADIUS), val, 0.0)
        return np.asarray(self.fn(s), dtype=float)

    def _moment_integrand(self, s):
        # s * omega(s), continuous at 0 for the log example
        if self.kind == "log_example":
            if s <= 0 or s > LOG_EXAMPLE_RADIUS:
                return 0.0
            return -1.0 / math.log(s)
        return s * float(self.omega(s))

    def moment_closed_form(self, s):
        """int_0^s sigma omega(sigma) d sigma where a closed form exists."""
        s = np.asarray(s, dtype=float)
        if self.kind == "rankine":
            return 0.5 * self.omega0 * np.minimum(s, self.a) ** 2
        if self.kind == "lamb_oseen":
            return self.circulation / (2.0 * math.pi) * -np.expm1(-s * s / self.core)
        if self.kind == "log_example":
            sc = np.minimum(s, LOG_EXAMPLE_RADIUS)
            with np.errstate(divide="ignore"):
                return np.where(sc > 0, special.exp1(np.log(1.0 / sc)), 0.0)
        return None

    def breakpoints(self) -> list[float]:
        if self.kind == "rankine":
            return [self.a]
        if self.kind == "log_example":
            return [LOG_EXAMPLE_RADIUS]
        return []


def make_grid(n: int, half_width: float = 1.0, mask_radius: float | None = None,
              origin=(0.0, 0.0)) -> GridField2D:
    """Zero field on an n x n cell-centred grid covering [-half_width, half_width]^2."""
    if n < 2:
        raise ValueError("need n >= 2")
    return GridField2D(np.zeros((n, n)), 2.0 * half_width / n, origin, mask_radius)


def _quad(fn, a, b, points):
    pts = [p for p in points if a < p < b]
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(fn, a, b, points=pts or None, epsabs=1e-14, epsrel=1e-11, limit=200)
        except integrate.IntegrationWarning as exc:
            raise ValueError(f"non-integrable vorticity near s={a}: {exc}") from None
    if not math.isfinite(val):
        raise ValueError(f"non-integrable vorticity near s={a}")
    return val


def radial_moment(spec: RadialVorticity, radii) -> np.ndarray:
    """Cumulative adaptive quadrature of s omega(s) over sorted radii."""
    radii = np.asarray(radii, dtype=float)
    uniq, inv = np.unique(radii, return_inverse=True)
    if uniq.size and uniq[0] <= 0:
        raise ValueError("radial grids must not sample the centre")
    out = np.empty(uniq.size)
    acc, prev = 0.0, 0.0
    pts = spec.breakpoints()
    for i, s in enumerate(uniq):
        acc += _quad(spec._moment_integrand, prev, s, pts)
        out[i] = acc
        prev = s
    return out[inv].reshape(radii.shape)


def radial_velocity(spec: RadialVorticity, grid: GridField2D) -> tuple[GridField2D, GridField2D]:
    """u = (-x2, x1)/s^2 int_0^s sigma omega, omega sampled at cell centres."""
    X, Y = grid.coords()
    dx, dy = X - grid.origin[0], Y - grid.origin[1]
    s = np.hypot(dx, dy)
    F = radial_moment(spec, s)
    u = np.stack([-dy * F / s ** 2, dx * F / s ** 2], axis=-1)
    w = spec.omega(s)
    if grid.mask_radius is not None:
        inside = grid.inside()
        u = np.where(inside[..., None], u, 0.0)
        w = np.where(inside, w, 0.0)
    return grid.with_data(u), grid.with_data(w)


def stationarity_residual(u: GridField2D, omega: GridField2D) -> float:
    """|| (u . grad_h) omega ||_{L^2} over the (masked) window."""
    if not u.same_geometry(omega) or u.components != 2 or omega.components != 1:
        raise ValueError("need a velocity and a vorticity on the same grid")
    valid = omega.inside()
    wx = partial(omega.data, omega.h, 1, valid)
    wy = partial(omega.data, omega.h, 0, valid)
    adv = u.data[..., 0] * wx + u.data[..., 1] * wy
    return math.sqrt(float(np.sum(omega.weights() * adv * adv)))


def _index_coords(f: GridField2D, px, py):
    x0 = f.origin[0] - 0.5 * (f.nx - 1) * f.h
    y0 = f.origin[1] - 0.5 * (f.ny - 1) * f.h
    return np.array([(py - y0) / f.h, (px - x0) / f.h])


def _sample(values, coords, order):
    return map_coordinates(values, coords, order=order, mode="grid-constant", cval=0.0,
                           prefilter=order > 1)


def advect(omega: GridField2D, dt: float, steps: int, record_every: int = 1, order: int = 3,
           t0: float = 0.0) -> SpaceTimeField:
    """Semi-Lagrangian transport of omega by its own disk velocity.

    Each step rebuilds u with zero boundary stream data, traces the departure
    point with backward RK2 (bilinear velocity), then samples omega at it with
    a spline of ``order`` (1 = bilinear).
    """
    if omega.mask_radius is None:
        raise ValueError("unmasked field: vorticity must be masked to the disk")
    if not dt > 0 or steps < 0 or record_every < 1:
        raise ValueError("need dt > 0, steps >= 0, record_every >= 1")
    if order not in (1, 3):
        raise ValueError("interpolation order must be 1 or 3")
    X, Y = omega.coords()
    inside = omega.inside()
    cur = omega.with_data(np.where(inside, omega.data, 0.0))
    times, slices = [t0], [cur]
    for n in range(1, steps + 1):
        u = reconstruct_velocity(cur)
        umax = float(np.max(u.magnitude()))
        if dt * umax > omega.h:
            raise ValueError(f"CFL violation: dt*max|u| = {dt * umax:.3g} > h = {omega.h:.3g}")
        u1, u2 = u.data[..., 0], u.data[..., 1]
        mx, my = X - 0.5 * dt * u1, Y - 0.5 * dt * u2
        c = _index_coords(omega, mx, my)
        um1, um2 = _sample(u1, c, 1), _sample(u2, c, 1)
        c = _index_coords(omega, X - dt * um1, Y - dt * um2)
        new = _sample(np.asarray(cur.data), c, order)
        cur = cur.with_data(np.where(inside, new, 0.0))
        if n % record_every == 0:
            times.append(t0 + n * dt)
            slices.append(cur)
    cyl = None
    if len(times) > 1:
        cyl = Cylinder(omega.origin, omega.mask_radius, times[0], times[-1])
    return SpaceTimeField.from_slices(times, slices, cyl)
