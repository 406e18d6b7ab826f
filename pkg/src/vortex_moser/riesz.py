"""Riesz potentials of zero-extended grid data and HLS ratio measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _quadrature as quad
from .fields import GridField2D, lq_norm


class SupercriticalError(ValueError):
    pass


def hls_exponent(d, beta, q):
    """Target exponent s = dq / (d - beta q) for 1 < q < d / beta."""
    if not 0 < beta < d:
        raise ValueError("need 0 < beta < d")
    if not (1 < q and q * beta < d):
        raise SupercriticalError("supercritical: need 1 < q < d/beta")
    return d * q / (d - beta * q)


@dataclass(frozen=True)
class RieszParams:
    d: int
    beta: float
    q: float
    s: float

    def __post_init__(self):
        s = hls_exponent(self.d, self.beta, self.q)
        if not math.isclose(s, self.s, rel_tol=1e-12):
            raise ValueError(f"s must equal dq/(d - beta q) = {s}")

    @classmethod
    def from_q(cls, q, beta=1.0, d=2) -> "RieszParams":
        return cls(d, beta, q, hls_exponent(d, beta, q))

    @classmethod
    def from_s(cls, s, beta=1.0, d=2) -> "RieszParams":
        # invert s = dq/(d - beta q)
        return cls.from_q(d * s / (d + beta * s), beta, d)

    @property
    def growth_exponent(self) -> float:
        return 1.0 - self.beta / self.d

    def bound_factor(self) -> float:
        """max{(q-1)^-(1-beta/d), s^(1-beta/d)}; multiplies C(d, beta)."""
        e = self.growth_exponent
        return max((self.q - 1.0) ** (-e), self.s ** e)


@dataclass(frozen=True)
class HlsReport:
    params: RieszParams
    ratio: float
    potential_norm: float
    source_norm: float
    tail_fraction: float
    constant_bound: float | None = None

    @property
    def within_bound(self) -> bool | None:
        if self.constant_bound is None:
            return None
        return self.ratio <= self.constant_bound


def riesz_potential(f: GridField2D, beta: float) -> GridField2D:
    """(I_beta f)(x) = int f(y) |x - y|^(beta - 2) dy on f's grid, c_beta = 1.

    The result is unmasked: the potential lives on the whole window.
    """
    if not 0 < beta < 2:
        raise ValueError("beta must lie in (0, 2)")
    if f.components != 1:
        raise ValueError("Riesz potential needs a scalar field")
    a = f.weights() * f.data
    return GridField2D(quad.convolve_on_grid(a, "riesz", f.h, beta), f.h, f.origin, None)


def riesz_potential_direct(f: GridField2D, beta: float, px, py) -> np.ndarray:
    """Direct summation at targets away from the source cells (reference path)."""
    X, Y = f.coords()
    a = f.weights() * f.data
    keep = a != 0
    return quad.direct_sum(px, py, X[keep], Y[keep], a[keep], lambda dx, dy: quad.riesz_kernel(dx, dy, beta))


def pad_to_window(f: GridField2D, factor: float = 3.0) -> GridField2D:
    """Zero-pad a masked field so the window side is >= factor * mask diameter."""
    if f.mask_radius is None:
        raise ValueError("need a masked field to size the evaluation window")
    need = int(math.ceil(factor * 2.0 * f.mask_radius / f.h - 1e-9))
    nx = max(f.nx, need + ((need - f.nx) % 2))
    ny = max(f.ny, need + ((need - f.ny) % 2))
    data = np.zeros((ny, nx))
    oy, ox = (ny - f.ny) // 2, (nx - f.nx) // 2
    data[oy:oy + f.ny, ox:ox + f.nx] = f.data
    return GridField2D(data, f.h, f.origin, f.mask_radius)


def potential_norm(f: GridField2D, beta: float, s: float, tail: str = "monopole",
                   window_factor: float = 3.0) -> tuple[float, float]:
    """Whole-plane ||I_beta f||_s: quadrature over the window's inscribed disk
    plus the far-field monopole tail beyond it.  Returns (norm, tail fraction)."""
    fp = pad_to_window(f, window_factor)
    I = riesz_potential(fp, beta)
    R = 0.5 * min(fp.nx, fp.ny) * fp.h
    inner = I.with_mask(R)
    body = float(np.sum(inner.weights() * np.abs(I.data) ** s))
    extra = 0.0
    if tail == "monopole":
        M = abs(float(np.sum(f.weights() * f.data)))
        p = (2.0 - beta) * s
        if p <= 2:
            raise ValueError("monopole tail diverges: need (2 - beta) s > 2")
        extra = 2.0 * math.pi * M ** s * R ** (2.0 - p) / (p - 2.0)
    elif tail != "none":
        raise ValueError(f"unknown tail model {tail!r}")
    total = body + extra
    return total ** (1.0 / s), (extra / total if total > 0 else 0.0)


def hls_ratio(f: GridField2D, params: RieszParams, C_calibrated: float | None = None,
              tail: str = "monopole", window_factor: float = 3.0) -> HlsReport:
    if params.d != 2:
        raise ValueError("grid potentials are two-dimensional")
    src = lq_norm(f, params.q).value
    if src == 0:
        raise ValueError("zero source field")
    pot, frac = potential_norm(f, params.beta, params.s, tail, window_factor)
    bound = None if C_calibrated is None else C_calibrated * params.bound_factor()
    return HlsReport(params, pot / src, pot, src, frac, bound)


def calibrate_constant(reports: list[HlsReport]) -> float:
    """Smallest C(d, beta) making every measured ratio sit under its bound."""
    return max(r.ratio / r.params.bound_factor() for r in reports)


def loglog_slope(x, y) -> float:
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])
