"""Exponent algebra for the Serrin-type condition, in exact rationals.

``q`` is the time exponent and ``s`` the space exponent throughout:
u in L^q_t L^s_x.  ``math.inf`` stands for an infinite exponent.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction

INF = math.inf


def exact(x):
    """Fraction for finite inputs (floats via their shortest repr), inf kept."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        if math.isinf(x):
            if x < 0:
                raise ValueError("exponents must be positive")
            return INF
        return Fraction(repr(x))
    if isinstance(x, str):
        return INF if x.strip().lower() in ("inf", "infinity") else Fraction(x)
    return Fraction(x)


def _recip(x):
    return Fraction(0) if x == INF else 1 / x


def kappa(d: int) -> Fraction:
    if d < 2:
        raise ValueError("need d >= 2")
    return Fraction(2) if d == 2 else Fraction(2 * d, d - 2)


def two_star(d: int):
    """Sobolev exponent 2d/(d-2); infinite in the plane."""
    if d < 2:
        raise ValueError("need d >= 2")
    return INF if d == 2 else Fraction(2 * d, d - 2)


def serrin_check(d: int, q, s) -> bool:
    """d = 2: q, s > 2.  d >= 3: 2/q + d/s <= 1 with q finite."""
    if d < 2:
        raise ValueError("need d >= 2")
    q, s = exact(q), exact(s)
    if not (q > 0 and s > 0):
        raise ValueError("exponents must be positive")
    if d == 2:
        return q > 2 and s > 2
    if q == INF:
        return False
    return 2 * _recip(q) + d * _recip(s) <= 1


def sobolev_pair_ok(d: int, q_star, s_star, mode: str = "equality") -> bool:
    """d/s* + 2/q* = d/2 (``equality``) or >= d/2 (``inequality``)."""
    val = d * _recip(exact(s_star)) + 2 * _recip(exact(q_star))
    if mode == "equality":
        return val == Fraction(d, 2)
    if mode == "inequality":
        return val >= Fraction(d, 2)
    raise ValueError(f"unknown mode {mode!r}")


def dual(x):
    """x_0 = 2x/(x - 2) for x > 2 (2 at infinity)."""
    x = exact(x)
    if not x > 2:
        raise ValueError("dual exponent undefined: need exponent > 2")
    return Fraction(2) if x == INF else 2 * x / (x - 2)


def minimal_p(s_star) -> int:
    """Smallest integer p > 2 with s*/2 > p/(p - 2), i.e. p > 2 s*/(s* - 2)."""
    s = exact(s_star)
    if not s > 2:
        raise ValueError("need s* > 2")
    if s == INF:
        return 3
    return math.floor(2 * s / (s - 2)) + 1


@dataclass(frozen=True)
class ExponentReport:
    d: int
    q: object
    s: object
    kappa: Fraction
    two_star: object
    s_star: object
    q_star: object
    s0: Fraction
    q0: Fraction
    serrin_ok: bool
    star_ok: bool
    absorption_ok: bool
    delta: object = None
    p: int | None = None
    note: str = ""

    def fields(self):
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "true" if v else "false"
            if v == INF:
                return "inf"
            return str(v)

        names = ["d", "q", "s", "kappa", "two_star", "s_star", "q_star", "s0", "q0",
                 "serrin_ok", "star_ok", "absorption_ok", "delta", "p", "note"]
        return [(n, fmt(getattr(self, n))) for n in names]


def absorption_ok(d: int, q, s, q_star, s_star, delta=None) -> ExponentReport:
    """s* >= s0, q* >= q0 and (q0, s0) satisfying d/s0 + 2/q0 >= d/2.

    For d >= 3 the last condition is the Serrin condition itself, so some
    admissible (q*, s*) works exactly when serrin_check does.
    """
    q, s = exact(q), exact(s)
    if not (q > 2 and s > 2):
        raise ValueError("dual exponent undefined: need q, s > 2")
    qs, ss = exact(q_star), exact(s_star)
    s0, q0 = dual(s), dual(q)
    star = sobolev_pair_ok(d, q0, s0, "inequality")
    ok = ss >= s0 and qs >= q0 and star
    note = ("d=2 is covered by the planar exp-integrability result, not by absorption"
            if d == 2 else "absorption feasible for some admissible pair <=> serrin_check")
    p = minimal_p(ss) if ss > 2 else None
    return ExponentReport(d, q, s, kappa(d), two_star(d), ss, qs, s0, q0,
                          serrin_check(d, q, s), star, ok, delta, p, note)


def rational_grid(start=Fraction(21, 10), step=Fraction(4, 10), stop=Fraction(20)) -> list[Fraction]:
    """start, start + step, ... up to stop, with stop itself appended."""
    out = []
    x = start
    while x <= stop:
        out.append(x)
        x += step
    if out[-1] != stop:
        out.append(stop)
    return out


def _admissible(d, q_star, s_star):
    return q_star > 2 and s_star > 2 and sobolev_pair_ok(d, q_star, s_star, "inequality")


def feasible(d: int, q, s, candidates, exhaustive: bool = False) -> bool:
    """Is there an admissible (q*, s*) from ``candidates`` + {q0, s0} making absorption work?

    Admissibility and absorption are monotone (smaller exponents only help),
    so the pruned search tries the least candidates above (q0, s0); with
    ``exhaustive`` every pair is checked.
    """
    q, s = exact(q), exact(s)
    q0, s0 = dual(q), dual(s)
    cand = sorted(set(candidates) | {q0, s0})
    if exhaustive:
        # absorption_ok per pair, with its pair-independent star condition hoisted
        if not sobolev_pair_ok(d, q0, s0, "inequality"):
            return False
        half = Fraction(d, 2)
        return any(a >= q0 and b >= s0 and a > 2 and b > 2 and d * _recip(b) + 2 * _recip(a) >= half
                   for a in cand for b in cand)
    a = cand[bisect.bisect_left(cand, q0)]
    b = cand[bisect.bisect_left(cand, s0)]
    return _admissible(d, a, b) and absorption_ok(d, q, s, a, b).absorption_ok


def equivalence_sweep(d: int = 3, grid=None, exhaustive: bool = False):
    """Rows (q, s, feasible, serrin_ok) over grid x grid."""
    grid = rational_grid() if grid is None else [exact(g) for g in grid]
    return [(q, s, feasible(d, q, s, grid, exhaustive), serrin_check(d, q, s))
            for q in grid for s in grid]
