"""Local Biot-Savart bounds: |u - k| against the Riesz potential of |omega|.

Constants the estimates leave unquantified are measured on the data
(``fitted_C``) instead of asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import (Cylinder, GridField2D, SpaceTimeField, divergence, lq_norm,
                     partial, central_mask)
from .green_disk import (DiskGreen, boundary_angles, boundary_term, default_boundary_count,
                         poisson_solve_disk, stream_to_velocity)
from .riesz import riesz_potential


class NotSolenoidalError(ValueError):
    pass


class CoverageError(ValueError):
    pass


def reconstruct_velocity(omega: GridField2D, boundary_phi=None, k=(0.0, 0.0)) -> GridField2D:
    """u = perp-grad(J1 + J2) + k on the vorticity's disk.

    ``boundary_phi`` is None (zero stream data), a callable of the angle, or
    equispaced samples.  Their mean is removed; only gradients are used.
    """
    if omega.mask_radius is None:
        raise ValueError("unmasked field: vorticity must be masked to the disk")
    g = DiskGreen(omega.mask_radius, omega.origin)
    J2 = poisson_solve_disk(g, omega)
    phi = J2.data
    if boundary_phi is not None:
        if callable(boundary_phi):
            vals = boundary_phi(boundary_angles(default_boundary_count(omega)))
        else:
            vals = np.asarray(boundary_phi, dtype=float)
        vals = vals - np.mean(vals)
        phi = phi + boundary_term(g, vals, omega).data
    u = stream_to_velocity(J2.with_data(phi))
    if k[0] or k[1]:
        ins = u.inside()[..., None]
        u = u.with_data(u.data + np.where(ins, np.asarray(k, float), 0.0))
    return u


def velocity_series(omega: SpaceTimeField, boundary_phi=None) -> SpaceTimeField:
    return omega.map(lambda w: reconstruct_velocity(w, boundary_phi))


def divergence_defect(u: GridField2D) -> float:
    """int |div_h u| / int |grad_h u| over full-stencil interior cells.

    An L^1 ratio: kinks of piecewise smooth fields (Rankine) cost O(h) here
    instead of an O(1) pointwise defect.
    """
    valid = u.inside()
    m = central_mask(central_mask(valid))
    if not np.any(m):
        return 0.0
    div = np.abs(divergence(u)[m])
    grad = np.sqrt(sum(partial(u.data[..., c], u.h, ax, valid)[m] ** 2 for c in (0, 1) for ax in (0, 1)))
    scale = float(np.sum(grad))
    return float(np.sum(div)) / scale if scale > 0 else 0.0


def _check_coverage(F: SpaceTimeField, Q: Cylinder):
    c = F.cylinder
    grid = F.grid
    R = grid.mask_radius if grid.mask_radius is not None else 0.5 * min(grid.nx, grid.ny) * grid.h
    tol = 1e-9 * max(1.0, Q.r)
    if math.dist(Q.center, grid.origin) > tol:
        raise CoverageError("cylinders must be centred on the data origin")
    if Q.r > R + tol or Q.t0 < c.t0 - tol or Q.t1 > c.t1 + tol:
        raise CoverageError(f"data coverage insufficient for cylinder r={Q.r}, [{Q.t0}, {Q.t1}]")


def _averaged_power(F: SpaceTimeField, p: float, Q: Cylinder) -> float:
    return lq_norm(F, p, averaged=True, region=Q).value ** p


def gamma_quantity(u: SpaceTimeField, omega: SpaceTimeField, Q2: Cylinder, epsilon: float) -> float:
    """Gamma(2Q) = 2r (avg |omega|^2)^(1/2) (avg |u|^(2+eps) + 1)^(1/(2+eps)) with r = Q2.r/2."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    _check_coverage(u, Q2)
    _check_coverage(omega, Q2)
    r = 0.5 * Q2.r
    p = 2.0 + epsilon
    w2 = _averaged_power(omega, 2.0, Q2)
    up = _averaged_power(u, p, Q2)
    return float(2.0 * r * math.sqrt(w2) * (up + 1.0) ** (1.0 / p))


@dataclass(frozen=True)
class LambdaQuantity:
    value: float
    parts: tuple[float, float, float]
    epsilon: float
    variant: str = "step2"


def lambda_quantity(u: SpaceTimeField, omega: SpaceTimeField, Q0: Cylinder, epsilon: float,
                    variant: str = "step2") -> LambdaQuantity:
    """Lambda_0 = sup_t avg_B |u| + (c r^2 avg|omega|^2 + 1)^(1/2) (avg|u|^(2+eps) + 1)^(1/(2+eps)).

    ``step2``: Q0 = 2Q with c r^2 = 4 r^2 = Q0.r^2.
    ``theorem``: Q0 = Q_{4r} with c r^2 = r^2 = (Q0.r / 4)^2.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    _check_coverage(u, Q0)
    _check_coverage(omega, Q0)
    if variant == "step2":
        rr = Q0.r ** 2
    elif variant == "theorem":
        rr = (0.25 * Q0.r) ** 2
    else:
        raise ValueError(f"unknown Lambda variant {variant!r}")
    idx = u.slices_in(Q0.t0, Q0.t1) or [int(np.argmin([abs(t - Q0.t1) for t in u.times]))]
    sup_l1 = max(lq_norm(u.fields[i], 1.0, averaged=True, region=Q0).value for i in idx)
    p = 2.0 + epsilon
    part2 = math.sqrt(rr * _averaged_power(omega, 2.0, Q0) + 1.0)
    part3 = (_averaged_power(u, p, Q0) + 1.0) ** (1.0 / p)
    sup_l1, part3 = float(sup_l1), float(part3)
    return LambdaQuantity(sup_l1 + part2 * part3, (sup_l1, part2, part3), epsilon, variant)


@dataclass
class BiotSavartBound:
    sigma: float
    gamma_q: float
    times: list[float]
    k_shift: list[tuple[float, float]]
    lhs: list[GridField2D]
    rhs_potential: list[GridField2D]
    rhs_constant: list[float]
    l1_term: list[float]
    fitted_per_slice: list[float]
    fitted_C: float = 0.0
    region: np.ndarray | None = field(default=None, repr=False)

    @property
    def time_spread(self) -> float:
        f = [c for c in self.fitted_per_slice if math.isfinite(c)]
        return (max(f) - min(f)) if f else 0.0

    def rows(self):
        for t, L, P, A, C in zip(self.times, self.lhs, self.rhs_potential, self.rhs_constant,
                                 self.fitted_per_slice):
            yield (t, float(np.max(L.data[self.region])), float(np.max(P.data[self.region])), A, C)


def rhs_potential_field(omega: GridField2D, r: float) -> GridField2D:
    """(1/2pi) int_{B_r} |omega(y)| / |x - y| dy on omega's grid."""
    mag = omega.with_data(omega.magnitude()).with_mask(r)
    P = riesz_potential(mag, 1.0)
    return P.with_data(P.data / (2.0 * math.pi))


def verify_local_bound(u: SpaceTimeField, omega: SpaceTimeField, Q: Cylinder, sigma: float,
                       mode: str = "fixed", k=(0.0, 0.0), epsilon: float = 1.0,
                       l1_scale: float | None = None, div_tol: float = 1e-2) -> BiotSavartBound:
    """Both sides of the local bound on sigma Q.

    ``mode='fixed'`` uses the vector ``k`` (or one vector per slice);
    ``mode='mean'`` uses per-slice component means over 2B.  The L^1 term is
    averaged over ``l1_scale * B`` (default B for fixed, 2B for mean).
    """
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if mode not in ("fixed", "mean"):
        raise ValueError(f"unknown mode {mode!r}")
    Q2 = Q.scaled(2.0)
    _check_coverage(u, Q2)
    _check_coverage(omega, Q2)
    for f in u.fields:
        if divergence_defect(f) > div_tol:
            raise NotSolenoidalError("not a stream-function field")
    gam = gamma_quantity(u, omega, Q2, epsilon)
    if l1_scale is None:
        l1_scale = 1.0 if mode == "fixed" else 2.0
    sQ = Q.scaled(sigma)
    grid = u.grid
    X, Y = grid.coords()
    region = np.hypot(X - Q.center[0], Y - Q.center[1]) < sQ.r
    if not np.any(region):
        raise CoverageError("sigma Q contains no cell centres")
    idx = u.slices_in(sQ.t0, sQ.t1)
    if not idx:
        raise CoverageError("no time slice inside sigma Q")
    k_arr = np.asarray(k, dtype=float)
    w2B = grid.weights(2.0 * Q.r, Q.center)
    out = BiotSavartBound(sigma, gam, [], [], [], [], [], [], [], region=region)
    for n, i in enumerate(idx):
        uf = u.fields[i]
        if mode == "mean":
            kt = tuple(float(np.sum(w2B * uf.data[..., c]) / np.sum(w2B)) for c in (0, 1))
        elif k_arr.ndim == 2:
            kt = tuple(k_arr[i])
        else:
            kt = (float(k_arr[0]), float(k_arr[1]))
        diff = uf.with_data(uf.data - np.asarray(kt))
        lhs = diff.with_data(np.where(region, diff.magnitude(), 0.0)).with_mask(None)
        P = rhs_potential_field(omega.fields[i], Q.r)
        try:
            l1 = lq_norm(diff, 1.0, averaged=True, region=l1_scale * Q.r).value
        except ValueError:
            l1 = math.inf
        A = (l1 + gam) / (1.0 - sigma) ** 3 if math.isfinite(l1) else math.inf
        excess = float(np.max((lhs.data - P.data)[region]))
        if excess <= 0 or math.isinf(A):
            C = 0.0
        elif A == 0:
            C = math.inf
        else:
            C = float(excess / A)
        out.times.append(u.times[i])
        out.k_shift.append(kt)
        out.lhs.append(lhs)
        out.rhs_potential.append(P.with_data(np.where(region, P.data, 0.0)))
        out.rhs_constant.append(float(A))
        out.l1_term.append(l1)
        out.fitted_per_slice.append(C)
    out.fitted_C = float(max(out.fitted_per_slice))
    return out
