import math
from fractions import Fraction

import numpy as np
import pytest

from vortex_moser.fields import Cylinder, SpaceTimeField, make_cutoff
from vortex_moser.flows import make_grid
from vortex_moser.moser import (build_ledger, certify_exp, exponent, hat_q, hat_q_telescoped,
                                next_exponent, q_star, q_star_bound, series_tail_bound,
                                step1_omega_bound, step2_u_bound, ve_check)


def constant_series(n, u_val, w_val, R=1.0, times=(-1.0, -0.5, 0.0)):
    g = make_grid(n, R, R)
    u = g.with_data(np.asarray(u_val, float) * np.ones((n, n, 2)))
    w = g.with_data(np.full((n, n), float(w_val)))
    cyl = Cylinder((0, 0), R, times[0], times[-1])
    return (SpaceTimeField.from_slices(times, [u] * len(times), cyl),
            SpaceTimeField.from_slices(times, [w] * len(times), cyl))


def test_exponent_sequence_closed_form_and_recursion():
    for eps in (Fraction(1, 4), Fraction(1), Fraction(4)):
        q = exponent(eps, 0)
        for k in range(20):
            q = next_exponent(q)
            assert q == exponent(eps, k + 1)
    assert [next_exponent(q) for q in (3, 4, 6)] == [4, 6, 10]


def test_ledger_constants_for_unit_epsilon():
    assert [exponent(1, k) for k in range(4)] == [3, 4, 6, 10]
    assert q_star(1, 3) == 2
    assert hat_q(1, 3) == Fraction(23, 10)
    assert hat_q_telescoped(1, 3) == Fraction(34, 10)
    assert q_star(Fraction(1), 3) <= q_star_bound(1)


def test_q_star_closed_form():
    for eps in (Fraction(1, 3), Fraction(2), Fraction(5, 2)):
        for j in range(1, 12):
            closed = ((2 ** j - 1) * eps + j) / (2 ** (j - 1) * eps + 1)
            assert q_star(eps, j) == closed


def test_q0_over_qj_at_most_one():
    for eps in (Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(4)):
        for j in range(1, 21):
            assert exponent(eps, 0) / exponent(eps, j) <= 1


def test_hat_q_majorant_for_large_epsilon():
    # for eps >= 1 every weight q_{j-k}/q_j is at most 2^(1-k)
    for eps in (Fraction(1), Fraction(2), Fraction(4), Fraction(10)):
        for j in range(1, 31):
            assert hat_q(eps, j) <= 4


def test_step1_examples():
    U, W = constant_series(64, (1, 0), 1.0)
    Qk, Qk1 = Cylinder.standard(1.0), Cylinder.standard(0.75)
    b = step1_omega_bound(U, W, Qk, Qk1, 3.0, 2)
    assert b.lhs == pytest.approx(1.0, rel=1e-12)
    assert b.rhs == pytest.approx(2 ** 2 * 2, rel=1e-12)
    assert b.fitted_constant == pytest.approx(1 / 2 ** 3, rel=1e-12)
    U0, W0 = constant_series(32, (0, 0), 0.0)
    z = step1_omega_bound(U0, W0, Qk, Qk1, 3.0, 1)
    assert z.lhs == 0 and z.rhs == 0 and z.fitted_constant == 0
    assert step1_omega_bound(U, W, Qk, Qk1, 1e6, 0).exponent == pytest.approx(2 - 2 / 1e6, abs=1e-15)
    with pytest.raises(ValueError, match="q > 2"):
        step1_omega_bound(U, W, Qk, Qk1, 2.0, 0)


def test_step2_examples():
    assert step2_u_bound(0.0, 5.0, 1.0, 3.0, 2) == pytest.approx(8 ** 2 * math.sqrt(3), rel=1e-14)
    vals = [step2_u_bound(0.3, 1.2, lam, 4.0, 1) for lam in (0.5, 1.0, 2.0)]
    assert vals == sorted(vals)
    with pytest.raises(ValueError):
        step2_u_bound(0.1, 1.0, 1.0, 2.5, 0, epsilon=1.0)


def test_ve_zero_vorticity():
    U, W = constant_series(32, (1, 0), 0.0)
    cut = make_cutoff(Cylinder.standard(0.5), Cylinder.standard(1.0))
    r = ve_check(U, W, cut, 0.5)
    assert r.lhs == 0 and r.rhs == 0 and r.fitted_V0 == 0


def test_ve_homogeneity(demo_128):
    U, W = demo_128
    cut = make_cutoff(Cylinder.standard(0.25), Cylinder.standard(0.5))
    for alpha in (0.0, 0.5, 0.9):
        a = ve_check(U, W, cut, alpha).fitted_V0
        b = ve_check(U, W.map(lambda f: 2 * f), cut, alpha).fitted_V0
        assert b == pytest.approx(a, rel=1e-12)


def test_ve_navier_stokes_variant_adds_dissipation(demo_128):
    U, W = demo_128
    cut = make_cutoff(Cylinder.standard(0.25), Cylinder.standard(0.5))
    e = ve_check(U, W, cut, 0.5)
    ns = ve_check(U, W, cut, 0.5, navier_stokes=True)
    assert ns.gradient_term > 0
    assert ns.lhs <= e.lhs  # zeta^2 <= zeta
    assert ns.time_term == pytest.approx(e.time_term)


def test_ve_u_scaling_with_cutoff_rescaling():
    # doubling |u| and halving |grad zeta| (double the radial band) leaves the transport term fixed
    U, W = constant_series(96, (1, 0), 1.0, R=2.0, times=(-2.0, -1.0, 0.0))
    g = W.grid
    X, Y = g.coords()
    W = W.map(lambda f: f.with_data(np.exp(-(X ** 2 + Y ** 2))))
    c1 = make_cutoff(Cylinder((0, 0), 0.5, -1.0, 0.0), Cylinder((0, 0), 1.0, -2.0, 0.0))
    c2 = make_cutoff(Cylinder((0, 0), 0.5, -1.0, 0.0), Cylinder((0, 0), 1.5, -2.0, 0.0))
    t1 = ve_check(U, W, c1, 0.5).transport
    t2 = ve_check(U.map(lambda f: 2 * f), W, c2, 0.5).transport
    assert t2 > t1 > 0


def test_ledger_on_constant_fields():
    U, W = constant_series(64, (1, 0), 1.0)
    L = build_ledger(U, W, Cylinder.standard(1.0), 1, 3)
    assert L.exponents == [3, 4, 6, 10]
    assert L.radii[0] == pytest.approx((2 - 2 ** -6) * 0.5)
    assert L.radii[-1] == pytest.approx(0.5)
    assert all(a > b for a, b in zip(L.radii, L.radii[1:]))
    assert L.q_star == 2 and L.hat_q == Fraction(23, 10) and L.c0 == 5
    assert all(row.u_norm == pytest.approx(1.0, rel=1e-12) for row in L.rows)
    assert L.step1_fitted[0] == pytest.approx(1 / 2 ** 7, rel=1e-12)
    lam = L.lambda0.value
    expected = 1.0 / (10 ** 1.0 * lam ** 4.0)
    assert L.final_fitted == pytest.approx(expected, rel=1e-12)


def test_ledger_coverage_error():
    U, W = constant_series(32, (1, 0), 1.0)
    with pytest.raises(ValueError, match="coverage"):
        build_ledger(U, W, Cylinder.standard(1.5), 1, 3)


def test_certificate_constants(tmp_path):
    U, W = constant_series(64, (0, 0), 0.0)
    L = build_ledger(U, W, Cylinder.standard(1.0), 1, 3)
    cert = certify_exp(U, L)
    assert cert.verdict == "certified" and all(v == pytest.approx(1.0, rel=1e-14) for v in cert.values)
    c = 3.0
    U, W = constant_series(64, (c, 0), 0.0)
    L = build_ledger(U, W, Cylinder.standard(1.0), 1, 3)
    cert = certify_exp(U, L)
    g = cert.gamma
    assert all(v == pytest.approx(math.exp(c ** (1 / g)), rel=1e-12) for v in cert.values)
    assert "verdict certified" in cert.report()


def test_certificate_saturation():
    U, W = constant_series(32, (1e200, 0), 0.0)
    L = build_ledger(*constant_series(32, (0, 0), 0.0), Cylinder.standard(1.0), 1, 3)
    assert certify_exp(U, L).verdict == "failed-at-resolution"


def test_doubling_gamma_keeps_bounded_fields_certified():
    U, W = constant_series(64, (0.6, 0.0), 0.0)
    L = build_ledger(U, W, Cylinder.standard(1.0), 1, 3)
    a, b = certify_exp(U, L, 1.0), certify_exp(U, L, 2.0)
    assert a.verdict == b.verdict == "certified"
    assert b.slice_max >= a.slice_max and b.slice_max < math.e


def test_demo_certificate(demo_128, demo_256):
    U, W = demo_128
    L = build_ledger(U, W, Cylinder.standard(0.5), 1, 3)
    cert = certify_exp(U, L, 1.0, refined=demo_256[0])
    assert cert.verdict == "certified" and cert.relative_change <= 0.05
    # larger C1 means a larger gamma; on |u| > 1 the integrand shrinks, on |u| < 1 it grows
    assert certify_exp(U, L, 4.0).slice_max != cert.slice_max


def exact_tail(rho, start, stop):
    return sum(rho ** k * Fraction(k ** k, math.factorial(k)) for k in range(start, stop))


def test_series_tail_matches_exact_rational_sum():
    assert series_tail_bound(2, 0.1) == pytest.approx(float(exact_tail(Fraction(1, 10), 4, 80)), rel=1e-12)
    assert series_tail_bound(1, 0.3) == pytest.approx(float(exact_tail(Fraction(3, 10), 1, 400)), rel=1e-12)
    assert series_tail_bound(2, 0.1) <= 1


def test_series_tail_boundary_and_monotonicity():
    with pytest.raises(ValueError, match="tail not summable"):
        series_tail_bound(2, 1 / math.e)
    with pytest.raises(ValueError, match="gamma"):
        series_tail_bound(0.5, 0.1)
    for rho in (0.05, 0.2, 0.3):
        vals = [series_tail_bound(g, rho) for g in (1, 2, 3, 4)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
