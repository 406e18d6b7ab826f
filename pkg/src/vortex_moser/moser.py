"""Moser-iteration bookkeeping: VE checks, the two step estimates, the exponent
ledger and the exponential-integrability certificate.

Unquantified constants are reported as fitted ratios (measured lhs over the
rhs evaluated with the constant set to 1); ess-sup in time is the max over
the provided slices, so it is a lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .biot_savart import CoverageError, LambdaQuantity, lambda_quantity
from .fields import (Cylinder, CutoffSpec, GridField2D, SpaceTimeField, esssup_time_norm,
                     exp_integral, lq_norm, partial)


def _ratio(a: float, b: float) -> float:
    if a == 0:
        return 0.0
    return math.inf if b == 0 else a / b


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


# ---------------------------------------------------------------------------
# vorticity estimates


@dataclass(frozen=True)
class VeReport:
    alpha: float
    lhs: float
    transport: float
    time_term: float
    gradient_term: float = 0.0
    navier_stokes: bool = False

    @property
    def rhs_integrand_split(self) -> tuple[float, float]:
        return self.transport, self.time_term

    @property
    def rhs(self) -> float:
        return self.transport + self.time_term

    @property
    def fitted_V0(self) -> float:
        return _ratio(self.lhs + self.gradient_term, self.rhs)


def _check_cutoff_coverage(F: SpaceTimeField, cutoff: CutoffSpec):
    g = F.grid
    R = g.mask_radius if g.mask_radius is not None else 0.5 * min(g.nx, g.ny) * g.h
    o = cutoff.outer
    tol = 1e-9 * max(1.0, o.r)
    if math.dist(o.center, g.origin) + o.r > R + tol:
        raise CoverageError("cutoff support leaves the data disk")
    if o.t0 < F.cylinder.t0 - tol or o.t1 > F.cylinder.t1 + tol:
        raise CoverageError("cutoff support leaves the data time interval")


def ve_check(u: SpaceTimeField, omega: SpaceTimeField, cutoff: CutoffSpec, alpha: float,
             navier_stokes: bool = False) -> VeReport:
    """Both sides of the vorticity estimate for one cutoff.

    With ``navier_stokes`` the left side carries zeta^2 plus the dissipation
    integral of |grad |omega|^((1+alpha)/2)|^2 zeta^2, and the time term uses
    the positive part of d zeta / dt.
    """
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    _check_cutoff_coverage(omega, cutoff)
    _check_cutoff_coverage(u, cutoff)
    g = omega.grid
    X, Y = g.coords()
    w = g.weights()
    valid = g.inside()
    o = cutoff.outer
    tw = [float(x) for x in omega.time_weights(o.t0, o.t1)]
    p = 1.0 + alpha
    lhs = transport = time_term = grad_term = 0.0
    for i, t in enumerate(omega.times):
        if t < o.t0 or t > o.t1:
            continue
        wp = omega.fields[i].magnitude() ** p
        zeta = cutoff.evaluate(X, Y, t)
        weight = zeta * zeta if navier_stokes else zeta
        lhs = max(lhs, float(np.sum(w * wp * weight)))
        if tw[i] == 0:
            continue
        dz = cutoff.dt(X, Y, t)
        if navier_stokes:
            dz = np.maximum(dz, 0.0)
            root = omega.fields[i].magnitude() ** (0.5 * p)
            gx = partial(root, g.h, 1, valid)
            gy = partial(root, g.h, 0, valid)
            grad_term += tw[i] * float(np.sum(w * (gx * gx + gy * gy) * zeta * zeta))
        transport += tw[i] * float(np.sum(w * wp * u.fields[i].magnitude() * cutoff.grad_norm(X, Y, t)))
        time_term += tw[i] * float(np.sum(w * wp * np.abs(dz)))
    return VeReport(alpha, lhs, transport, time_term, grad_term, navier_stokes)


# ---------------------------------------------------------------------------
# the step pair


@dataclass(frozen=True)
class StepBound:
    lhs: float
    rhs: float
    exponent: float

    @property
    def fitted_constant(self) -> float:
        return _ratio(self.lhs, self.rhs)


def step1_omega_bound(u: SpaceTimeField, omega: SpaceTimeField, Qk: Cylinder, Qk1: Cylinder,
                      q: float, j_minus_k: int) -> StepBound:
    """Uniform-in-time bound for omega with alpha = 1 - 2/q.

    lhs: max over slices in I_{k+1} of avg_{B_{k+1}} |omega|^(2(1-1/q));
    rhs: 2^(j-k) [(avg|omega|^2)^(1-1/q) (1 + (avg|u|^q)^(1/q))] over Q_k, constant 1.
    """
    if not q > 2:
        raise ValueError("step 1 needs q > 2")
    expo = 2.0 * (1.0 - 1.0 / q)
    lhs = esssup_time_norm(omega, expo, region=Qk1, averaged=True).value
    w2 = lq_norm(omega, 2.0, averaged=True, region=Qk).value ** 2
    uq = lq_norm(u, q, averaged=True, region=Qk).value
    a = w2 ** (1.0 - 1.0 / q)
    return StepBound(lhs, 2.0 ** j_minus_k * (a + uq * a), expo)


def step2_u_bound(r_omega_l2: float, u_q_norm: float, lambda0: float, q: float, j_minus_k: int,
                  epsilon: float | None = None) -> float:
    """8^(j-k) q^(1/2) [r ||omega||_{L^2(Q0)} (1 + ||u||_q)^(q/(2(q-1))) + Lambda0], constant 1."""
    if epsilon is not None and q < 2.0 + epsilon - 1e-12:
        raise ValueError("step 2 needs q >= 2 + epsilon")
    if not q > 1:
        raise ValueError("step 2 needs q > 1")
    return 8.0 ** j_minus_k * math.sqrt(q) * (
        r_omega_l2 * (1.0 + u_q_norm) ** (q / (2.0 * (q - 1.0))) + lambda0)


def next_exponent(q):
    return 2 * (q - 1)


def exponent(epsilon, k: int):
    """q_k = 2^k eps + 2 (exact for Fraction / int inputs)."""
    return 2 ** k * epsilon + 2


def q_star(epsilon, j: int) -> Fraction:
    e = _exact(epsilon)
    return sum((exponent(e, k) for k in range(1, j + 1)), Fraction(0)) / exponent(e, j)


def hat_q(epsilon, j: int) -> Fraction:
    """sum_{k=1}^{j} k q_{j-k} / q_j."""
    e = _exact(epsilon)
    return sum((k * exponent(e, j - k) for k in range(1, j + 1)), Fraction(0)) / exponent(e, j)


def hat_q_telescoped(epsilon, j: int) -> Fraction:
    """sum_{k=1}^{j} k q_{j+1-k} / q_j, the weights the telescoped product carries."""
    e = _exact(epsilon)
    return sum((k * exponent(e, j + 1 - k) for k in range(1, j + 1)), Fraction(0)) / exponent(e, j)


def q_star_bound(epsilon) -> float:
    return 4.0 - math.log2(epsilon)


# ---------------------------------------------------------------------------
# ledger


@dataclass
class LedgerRow:
    k: int
    radius: float
    q: Fraction
    u_norm: float
    omega_norm: float = math.nan
    step1_rhs: float = math.nan
    step2_rhs: float = math.nan
    fitted_constant: float = math.nan


@dataclass
class IterationLedger:
    epsilon: Fraction
    j: int
    r: float
    center: tuple[float, float]
    t_top: float
    radii: list[float]
    rows: list[LedgerRow]
    q_star: Fraction
    hat_q: Fraction
    c0: Fraction
    lambda0: LambdaQuantity
    omega_l2: float
    final_fitted: float
    step1_fitted: list[float] = field(default_factory=list)

    @property
    def exponents(self) -> list[Fraction]:
        return [row.q for row in self.rows]

    @property
    def fitted_product(self) -> float:
        return float(np.prod([row.fitted_constant for row in self.rows[1:]])) if self.j else 1.0

    def gamma(self, C1: float = 1.0) -> float:
        return C1 * float(self.c0) * self.lambda0.value

    def csv_rows(self):
        for row in self.rows:
            yield (row.k, row.radius, float(row.q), row.u_norm, row.omega_norm, row.fitted_constant)


def ledger_radius(r: float, m: int, J: int) -> float:
    return (2.0 - 2.0 ** (m - J)) * r


def build_ledger(u: SpaceTimeField, omega: SpaceTimeField, Q0: Cylinder, epsilon, j: int) -> IterationLedger:
    """Run the exponent chain q_0 = 2 + eps, ..., q_j on shrinking cylinders.

    ``Q0`` is 2Q, so r = Q0.r / 2.  The base family has radii
    (2 - 2^(m - 2j)) r, m = 0..2j; step k lives on m = 2k and its omega bound on
    m = 2k + 1.
    """
    eps = _exact(epsilon)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    if j < 1:
        raise ValueError("need j >= 1")
    g = u.grid
    R = g.mask_radius if g.mask_radius is not None else 0.5 * min(g.nx, g.ny) * g.h
    tol = 1e-9 * max(1.0, Q0.r)
    if (Q0.r > R + tol or Q0.t0 < u.cylinder.t0 - tol or Q0.t1 > u.cylinder.t1 + tol
            or math.dist(Q0.center, g.origin) > tol):
        raise CoverageError("data coverage insufficient for Q0")
    r = 0.5 * Q0.r
    J = 2 * j
    radii = [ledger_radius(r, m, J) for m in range(J + 1)]
    cyl = [Cylinder.standard(R_m, Q0.center, Q0.t1, Q0.scaling) for R_m in radii]
    lam = lambda_quantity(u, omega, Q0, float(eps), "step2")
    w_l2 = lq_norm(omega, 2.0, averaged=True, region=Q0).value
    qs = [exponent(eps, k) for k in range(j + 1)]
    rows: list[LedgerRow] = []
    step1 = []
    for k in range(j + 1):
        qk = float(qs[k])
        rows.append(LedgerRow(k, radii[2 * k], qs[k], float(lq_norm(u, qk, averaged=True, region=cyl[2 * k]).value)))
    for k in range(j):
        qk = float(qs[k])
        s1 = step1_omega_bound(u, omega, cyl[2 * k], cyl[2 * k + 1], qk, J - 2 * k)
        rows[k].omega_norm = s1.lhs
        rows[k].step1_rhs = s1.rhs
        step1.append(s1.fitted_constant)
        rhs = step2_u_bound(r * w_l2, rows[k].u_norm, lam.value, qk, J - 2 * k)
        rows[k + 1].step2_rhs = rhs
        rows[k + 1].fitted_constant = _ratio(rows[k + 1].u_norm, rhs)
    qstar = q_star(eps, j)
    final = _ratio(rows[j].u_norm, float(qs[j]) ** (float(qstar) / 2.0) * lam.value ** (2.0 * float(qstar)))
    return IterationLedger(eps, j, r, Q0.center, Q0.t1, radii, rows, qstar, hat_q(eps, j),
                           2 * qstar + 1, lam, w_l2, final, step1)


# ---------------------------------------------------------------------------
# exponential integrability


@dataclass
class ExpCertificate:
    gamma: float
    lambda0: float
    c0: float
    C1: float
    radius: float
    times: list[float]
    values: list[float]
    saturated: bool
    comparison_max: float | None
    relative_change: float | None
    tolerance: float = 0.05

    @property
    def slice_max(self) -> float:
        return max(self.values)

    @property
    def stable(self) -> bool:
        return self.relative_change is not None and self.relative_change <= self.tolerance

    @property
    def verdict(self) -> str:
        finite = all(math.isfinite(v) for v in self.values)
        return "certified" if finite and not self.saturated and self.stable else "failed-at-resolution"

    def report(self) -> str:
        lines = [f"verdict {self.verdict}",
                 f"gamma {self.gamma:.17g}",
                 f"lambda0 {self.lambda0:.17g}",
                 f"c0 {self.c0:.17g}",
                 f"C1 {self.C1:.17g}",
                 f"ball_radius {self.radius:.17g}",
                 f"slice_max {self.slice_max:.17g}",
                 f"refined_max {'nan' if self.comparison_max is None else format(self.comparison_max, '.17g')}",
                 f"relative_change {'nan' if self.relative_change is None else format(self.relative_change, '.17g')}"]
        lines += [f"t={t:.17g} value={v:.17g}" for t, v in zip(self.times, self.values)]
        return "\n".join(lines) + "\n"


def coarsen(f: GridField2D) -> GridField2D:
    """2x2 block averages (even sizes), same window and mask."""
    ny, nx = f.ny - f.ny % 2, f.nx - f.nx % 2
    if nx < 4 or ny < 4:
        raise ValueError("grid too small to coarsen")
    d = f.data[:ny, :nx]
    d = d.reshape(ny // 2, 2, nx // 2, 2, *d.shape[2:]).mean(axis=(1, 3))
    shift = (0.5 * (f.nx - nx) * f.h, 0.5 * (f.ny - ny) * f.h)
    return GridField2D(d, 2 * f.h, (f.origin[0] - shift[0], f.origin[1] - shift[1]), f.mask_radius)


def _slice_exp(u: SpaceTimeField, gamma: float, radius: float, t0: float, t1: float):
    idx = u.slices_in(t0, t1)
    if not idx:
        raise CoverageError("no slice inside the certificate interval")
    times, vals, sat = [], [], False
    for i in idx:
        v, s = exp_integral(u.fields[i], gamma, averaged=True, region=radius, full_output=True)
        times.append(u.times[i])
        vals.append(v)
        sat |= s
    return times, vals, sat


def certify_exp(u: SpaceTimeField, ledger: IterationLedger, C1: float = 1.0,
                refined: SpaceTimeField | None = None, tolerance: float = 0.05) -> ExpCertificate:
    """avg_{B_{r/2}} exp(|u|^(1/gamma)) per slice of I_{r/2}, gamma = C1 c0 Lambda0.

    Stability compares the slice max with ``refined`` (same flow, finer grid)
    or, failing that, with the data coarsened once.
    """
    if not C1 > 0:
        raise ValueError("C1 must be positive")
    gamma = ledger.gamma(C1)
    half = 0.5 * ledger.r
    reg = Cylinder.standard(half, ledger.center, ledger.t_top, u.cylinder.scaling)
    times, vals, sat = _slice_exp(u, gamma, half, reg.t0, reg.t1)
    other = refined if refined is not None else u.map(coarsen)
    try:
        _, ovals, osat = _slice_exp(other, gamma, half, reg.t0, reg.t1)
        cmp_max = max(ovals)
        change = abs(cmp_max - max(vals)) / max(vals) if not osat else math.inf
    except (CoverageError, ValueError):
        cmp_max, change = None, None
    return ExpCertificate(gamma, ledger.lambda0.value, float(ledger.c0), C1, half, times, vals,
                          sat, cmp_max, change, tolerance)


def series_tail_bound(gamma: float, C_over_C1: float, max_terms: int = 1_000_000) -> float:
    """sum_{k >= ceil(gamma^2)} rho^k k^k / k!, stopped once a term falls below 1e-15."""
    if not gamma >= 1:
        raise ValueError("need gamma >= 1")
    rho = C_over_C1
    if not rho > 0:
        raise ValueError("need C/C1 > 0")
    if rho >= 1.0 / math.e:
        raise ValueError("tail not summable: C/C1 >= 1/e")
    k = math.ceil(gamma * gamma - 1e-12)
    lr = math.log(rho)
    total = 0.0
    for _ in range(max_terms):
        term = math.exp(k * lr + k * math.log(k) - math.lgamma(k + 1)) if k > 0 else 1.0
        total += term
        if term < 1e-15:
            break
        k += 1
    else:
        raise ValueError("tail did not converge within max_terms")
    return total
