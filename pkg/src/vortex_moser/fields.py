"""Field containers, space-time cylinders, cutoff functions and norm functionals.

Grids are uniform and cell-centred.  ``origin`` is the centre of the sample
window and doubles as the centre of the optional disk mask.  A cell contributes
its sample times the exact area of its overlap with the integration disk, so
samples of cells lying entirely outside the disk are ignored (zero extension).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ._quadrature import disk_weights

EXP_CAP = 1e300
_LOG_EXP_CAP = math.log(EXP_CAP)


class DegenerateRegionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridField2D:
    """Scalar ``(ny, nx)`` or 2-vector ``(ny, nx, 2)`` samples at cell centres."""

    data: np.ndarray
    h: float
    origin: tuple[float, float] = (0.0, 0.0)
    mask_radius: float | None = None

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 3 and data.shape[2] == 1:
            data = data[:, :, 0]
        if data.ndim not in (2, 3) or (data.ndim == 3 and data.shape[2] != 2):
            raise ValueError(f"data must have shape (ny, nx) or (ny, nx, 2), got {data.shape}")
        if data.shape[0] < 2 or data.shape[1] < 2:
            raise ValueError("need nx, ny >= 2")
        if not self.h > 0:
            raise ValueError("spacing h must be positive")
        if not np.all(np.isfinite(data)):
            raise ValueError("field samples must be finite")
        if self.mask_radius is not None and not self.mask_radius > 0:
            raise ValueError("mask_radius must be positive")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def ny(self) -> int:
        return self.data.shape[0]

    @property
    def nx(self) -> int:
        return self.data.shape[1]

    @property
    def components(self) -> int:
        return 1 if self.data.ndim == 2 else 2

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.origin[0] + (np.arange(self.nx) - 0.5 * (self.nx - 1)) * self.h
        ys = self.origin[1] + (np.arange(self.ny) - 0.5 * (self.ny - 1)) * self.h
        return np.meshgrid(xs, ys)

    def same_geometry(self, other: "GridField2D") -> bool:
        return (
            self.nx == other.nx and self.ny == other.ny and self.h == other.h
            and self.origin == other.origin and self.mask_radius == other.mask_radius
        )

    def magnitude(self) -> np.ndarray:
        if self.components == 1:
            return np.abs(self.data)
        return np.hypot(self.data[..., 0], self.data[..., 1])

    def weights(self, radius: float | None = None, center=None) -> np.ndarray:
        """Quadrature weights over ``B_radius(center)`` intersected with the mask."""
        center = self.origin if center is None else (float(center[0]), float(center[1]))
        R = self.mask_radius
        if radius is not None:
            if R is not None and center != self.origin:
                raise ValueError("sub-ball must be centred on the masked field's origin")
            R = radius if R is None else min(R, radius)
        if R is None:
            return np.full((self.ny, self.nx), self.h * self.h)
        return disk_weights(self.nx, self.ny, self.h, self.origin, center, R)

    def inside(self, radius: float | None = None) -> np.ndarray:
        """Cells whose centre lies in the (masked) disk."""
        R = self.mask_radius if radius is None else radius
        if R is None:
            return np.ones((self.ny, self.nx), dtype=bool)
        X, Y = self.coords()
        return np.hypot(X - self.origin[0], Y - self.origin[1]) < R

    def with_data(self, data) -> "GridField2D":
        return replace(self, data=data)

    def with_mask(self, radius: float | None) -> "GridField2D":
        return replace(self, mask_radius=radius)

    def __mul__(self, c: float) -> "GridField2D":
        return self.with_data(self.data * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Cylinder:
    """``B_r(center) x [t0, t1]``; ``scaling`` fixes how scaled copies shrink in time."""

    center: tuple[float, float]
    r: float
    t0: float
    t1: float
    scaling: str = "euler"

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("cylinder radius must be positive")
        if not self.t0 < self.t1:
            raise ValueError("cylinder needs t0 < t1")
        if self.scaling not in ("euler", "parabolic"):
            raise ValueError(f"unknown scaling {self.scaling!r}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @classmethod
    def standard(cls, r: float, center=(0.0, 0.0), t_top: float = 0.0,
                 scaling: str = "euler") -> "Cylinder":
        length = r if scaling == "euler" else r * r
        return cls(center, r, t_top - length, t_top, scaling)

    def scaled(self, sigma: float) -> "Cylinder":
        return Cylinder.standard(sigma * self.r, self.center, self.t1, self.scaling)

    @property
    def length(self) -> float:
        return self.t1 - self.t0

    def contains(self, other: "Cylinder") -> bool:
        d = math.dist(self.center, other.center)
        return d + other.r <= self.r and self.t0 <= other.t0 and other.t1 <= self.t1


def time_weights(times: Sequence[float], t0: float, t1: float) -> np.ndarray:
    """Lengths of the slices' Voronoi cells clipped to [t0, t1].

    Uniform slices at interval midpoints give the midpoint rule; uniform
    slices including both endpoints give the trapezoid rule.
    """
    t = np.asarray(times, dtype=float)
    mids = 0.5 * (t[1:] + t[:-1])
    lo = np.concatenate([[-np.inf], mids])
    hi = np.concatenate([mids, [np.inf]])
    return np.clip(np.minimum(hi, t1) - np.maximum(lo, t0), 0.0, None)


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    times: tuple[float, ...]
    fields: tuple[GridField2D, ...]
    cylinder: Cylinder

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        fields = tuple(self.fields)
        if len(times) != len(fields) or not times:
            raise ValueError("need one field per time, at least one slice")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("slice times must be strictly increasing")
        f0 = fields[0]
        if any(not f.same_geometry(f0) or f.components != f0.components for f in fields):
            raise ValueError("all slices must share grid geometry")
        if times[0] < self.cylinder.t0 or times[-1] > self.cylinder.t1:
            raise ValueError("slice times must lie in the cylinder interval")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fields", fields)

    @classmethod
    def from_slices(cls, times, fields, cylinder: Cylinder | None = None) -> "SpaceTimeField":
        times = [float(t) for t in times]
        if cylinder is None:
            f = fields[0]
            r = f.mask_radius if f.mask_radius is not None else 0.5 * min(f.nx, f.ny) * f.h
            t1 = times[-1]
            t0 = times[0] if len(times) > 1 else t1 - 1.0
            cylinder = Cylinder(f.origin, r, t0, t1)
        return cls(tuple(times), tuple(fields), cylinder)

    @property
    def grid(self) -> GridField2D:
        return self.fields[0]

    def __len__(self):
        return len(self.times)

    def map(self, fn) -> "SpaceTimeField":
        return replace(self, fields=tuple(fn(f) for f in self.fields))

    def time_weights(self, t0: float | None = None, t1: float | None = None) -> np.ndarray:
        t0 = self.cylinder.t0 if t0 is None else t0
        t1 = self.cylinder.t1 if t1 is None else t1
        if len(self.times) == 1:
            # a lone slice stands for the whole interval
            return np.array([max(0.0, min(t1, self.cylinder.t1) - max(t0, self.cylinder.t0))])
        return time_weights(self.times, max(t0, self.cylinder.t0), min(t1, self.cylinder.t1))

    def slices_in(self, t0: float, t1: float) -> list[int]:
        return [i for i, t in enumerate(self.times) if t0 <= t <= t1]


@dataclass(frozen=True)
class NormReport:
    q: float
    value: float
    averaged: bool
    region: object = None
    time_mode: str = "fixed-slice"


def _region_ball(f: GridField2D, region):
    if region is None:
        return None, None
    if isinstance(region, Cylinder):
        return region.r, region.center
    return float(region), None


def _space_integral(f: GridField2D, vals: np.ndarray, radius, center):
    w = f.weights(radius, center)
    return float(np.sum(w * vals)), float(np.sum(w)), w


def lq_norm(f, q: float, averaged: bool = False, region=None) -> NormReport:
    """(Averaged) L^q norm over the mask, optionally restricted to a ball or cylinder.

    ``q = inf`` returns the largest sample over cells touching the region,
    a lower bound for the true essential supremum.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    grid = f.grid if isinstance(f, SpaceTimeField) else f
    radius, center = _region_ball(grid, region)
    if isinstance(f, SpaceTimeField):
        t0, t1 = (region.t0, region.t1) if isinstance(region, Cylinder) else (None, None)
        tw = f.time_weights(t0, t1)
        w = grid.weights(radius, center)
        measure = float(np.sum(w)) * float(np.sum(tw))
        if measure <= 0:
            raise DegenerateRegionError("degenerate region")
        if math.isinf(q):
            value = max(float(np.max(s.magnitude()[w > 0])) for s, wt in zip(f.fields, tw) if wt > 0)
        else:
            total = sum(wt * float(np.sum(w * s.magnitude() ** q))
                        for s, wt in zip(f.fields, tw) if wt > 0)
            value = (total / measure if averaged else total) ** (1.0 / q)
        return NormReport(q, float(value), averaged, region, "space-time")

    w = f.weights(radius, center)
    measure = float(np.sum(w))
    if measure <= 0:
        raise DegenerateRegionError("degenerate region")
    mag = f.magnitude()
    if math.isinf(q):
        value = float(np.max(mag[w > 0]))
    else:
        total = float(np.sum(w * mag ** q))
        value = (total / measure if averaged else total) ** (1.0 / q)
    return NormReport(q, value, averaged, region, "fixed-slice")


def esssup_time_norm(F: SpaceTimeField, q: float, weight: "CutoffSpec | None" = None,
                     region=None, averaged: bool = False) -> NormReport:
    """Max over slices of the spatial integral of |f|^q * zeta (no 1/q root)."""
    if not q > 0:
        raise ValueError("q must be positive")
    grid = F.grid
    radius, center = _region_ball(grid, region)
    idx = range(len(F))
    if isinstance(region, Cylinder):
        idx = F.slices_in(region.t0, region.t1)
        if not idx:
            raise DegenerateRegionError("degenerate region")
    w = grid.weights(radius, center)
    measure = float(np.sum(w))
    if measure <= 0:
        raise DegenerateRegionError("degenerate region")
    X, Y = grid.coords()
    best = 0.0
    for i in idx:
        vals = F.fields[i].magnitude() ** q
        if weight is not None:
            vals = vals * weight.evaluate(X, Y, F.times[i])
        v = float(np.sum(w * vals))
        if averaged:
            v /= measure
        best = max(best, v)
    return NormReport(q, best, averaged, region, "ess-sup-in-time")


def exp_integral(f: GridField2D, gamma: float, averaged: bool = True, region=None,
                 full_output: bool = False):
    """Quadrature of exp(|f|^(1/gamma)); samples are capped at ``EXP_CAP``.

    With ``full_output`` returns ``(value, saturated)``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    radius, center = _region_ball(f, region)
    w = f.weights(radius, center)
    measure = float(np.sum(w))
    if measure <= 0:
        raise DegenerateRegionError("degenerate region")
    expo = f.magnitude() ** (1.0 / gamma)
    active = w > 0
    saturated = bool(np.any(expo[active] >= _LOG_EXP_CAP))
    vals = np.exp(np.minimum(expo, _LOG_EXP_CAP))
    total = float(np.sum(w * vals))
    value = total / measure if averaged else total
    if full_output:
        return value, saturated
    return value


# ---------------------------------------------------------------------------
# cutoffs


def smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def smoothstep_slope(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    return np.where(inside, 30.0 * x * x * (1.0 - x) ** 2, 0.0)


@dataclass(frozen=True)
class CutoffSpec:
    """zeta = S(radial) * S(backward time), equal to 1 on ``inner``.

    ``grad_bound`` and ``dt_bound`` are measured on the transition bands.
    """

    inner: Cylinder
    outer: Cylinder
    profile: str = "quintic-smoothstep"
    grad_bound: float = field(default=0.0)
    dt_bound: float = field(default=0.0)

    @property
    def radial_band(self) -> float:
        return self.outer.r - self.inner.r

    @property
    def time_band(self) -> float:
        return self.inner.t0 - self.outer.t0

    def _parts(self, X, Y, t):
        s = np.hypot(np.asarray(X) - self.outer.center[0], np.asarray(Y) - self.outer.center[1])
        xr = (self.outer.r - s) / self.radial_band
        xt = (t - self.outer.t0) / self.time_band
        if t > self.outer.t1:
            xt = -1.0
        return xr, xt

    def evaluate(self, X, Y, t: float):
        xr, xt = self._parts(X, Y, t)
        return smoothstep(xr) * smoothstep(xt)

    def grad_norm(self, X, Y, t: float):
        xr, xt = self._parts(X, Y, t)
        return smoothstep_slope(xr) / self.radial_band * smoothstep(xt)

    def dt(self, X, Y, t: float):
        xr, xt = self._parts(X, Y, t)
        return smoothstep(xr) * smoothstep_slope(xt) / self.time_band


def make_cutoff(inner: Cylinder, outer: Cylinder, samples: int = 4001) -> CutoffSpec:
    if math.dist(inner.center, outer.center) > 0:
        raise ValueError("cutoff cylinders must be concentric")
    if not (inner.r < outer.r and inner.t0 > outer.t0 and inner.t1 <= outer.t1):
        raise ValueError("zero-width transition band: inner must sit strictly inside outer")
    x = np.linspace(0.0, 1.0, samples)
    peak = float(np.max(smoothstep_slope(x)))
    return CutoffSpec(inner, outer, grad_bound=peak / (outer.r - inner.r),
                      dt_bound=peak / (inner.t0 - outer.t0))


# ---------------------------------------------------------------------------
# discrete derivatives on (possibly masked) grids


def partial(values: np.ndarray, h: float, axis: int, valid: np.ndarray | None = None) -> np.ndarray:
    """Second-order difference along ``axis`` (1 = x, 0 = y).

    Central where both neighbours are valid, one-sided second order where only
    one side has two valid cells, first order as a last resort, else zero.
    """
    v = np.asarray(values, dtype=float)
    if valid is None:
        valid = np.ones(v.shape, dtype=bool)
    n = v.shape[axis]

    def sh(a, k, fill):
        out = np.full_like(a, fill)
        src = [slice(None)] * a.ndim
        dst = [slice(None)] * a.ndim
        if k > 0:
            src[axis], dst[axis] = slice(k, None), slice(0, n - k)
        else:
            src[axis], dst[axis] = slice(0, n + k), slice(-k, None)
        out[tuple(dst)] = a[tuple(src)]
        return out

    fp1, fm1 = sh(v, 1, 0.0), sh(v, -1, 0.0)
    fp2, fm2 = sh(v, 2, 0.0), sh(v, -2, 0.0)
    vp1, vm1 = sh(valid, 1, False), sh(valid, -1, False)
    vp2, vm2 = sh(valid, 2, False), sh(valid, -2, False)

    central = (fp1 - fm1) / (2 * h)
    fwd2 = (-3 * v + 4 * fp1 - fp2) / (2 * h)
    bwd2 = (3 * v - 4 * fm1 + fm2) / (2 * h)
    fwd1 = (fp1 - v) / h
    bwd1 = (v - fm1) / h
    out = np.where(vp1 & vm1, central,
          np.where(vp1 & vp2, fwd2,
          np.where(vm1 & vm2, bwd2,
          np.where(vp1, fwd1,
          np.where(vm1, bwd1, 0.0)))))
    return np.where(valid, out, 0.0)


def central_mask(valid: np.ndarray) -> np.ndarray:
    """Cells where every 5-point neighbour is valid."""
    m = valid.copy()
    m[1:, :] &= valid[:-1, :]
    m[:-1, :] &= valid[1:, :]
    m[:, 1:] &= valid[:, :-1]
    m[:, :-1] &= valid[:, 1:]
    m[0, :] = m[-1, :] = False
    m[:, 0] = m[:, -1] = False
    return m


def divergence(u: GridField2D) -> np.ndarray:
    valid = u.inside()
    return (partial(u.data[..., 0], u.h, 1, valid) + partial(u.data[..., 1], u.h, 0, valid))


def curl(u: GridField2D) -> GridField2D:
    valid = u.inside()
    w = partial(u.data[..., 1], u.h, 1, valid) - partial(u.data[..., 0], u.h, 0, valid)
    return u.with_data(w)


def apply_laplacian(f: GridField2D) -> np.ndarray:
    """5-point Laplacian; zero where the stencil leaves the valid region."""
    v = f.data
    valid = f.inside()
    lap = np.zeros_like(v)
    lap[1:-1, 1:-1] = (v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2]
                       - 4 * v[1:-1, 1:-1]) / f.h ** 2
    return np.where(central_mask(valid), lap, 0.0)
