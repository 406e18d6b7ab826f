import math

import numpy as np
import pytest

from vortex_moser.fields import GridField2D
from vortex_moser.riesz import (RieszParams, SupercriticalError, calibrate_constant, hls_exponent,
                                hls_ratio, loglog_slope, riesz_potential, riesz_potential_direct)


def indicator(n=128, R=1.0, half=1.0, h=None):
    h = 2.0 * half / n if h is None else h
    g = GridField2D(np.zeros((n, n)), h, (0.0, 0.0), R)
    return g.with_data(g.inside().astype(float))


def test_hls_exponent_examples():
    assert hls_exponent(2, 1, 1.5) == pytest.approx(6.0)
    assert hls_exponent(2, 1, 4 / 3) == pytest.approx(4.0)
    with pytest.raises(SupercriticalError, match="supercritical"):
        hls_exponent(2, 1, 2.0)
    with pytest.raises(SupercriticalError):
        hls_exponent(2, 1, 1.0)


def test_params_round_trip():
    p = RieszParams.from_s(16.0)
    assert p.s == pytest.approx(16.0) and p.q == pytest.approx(32 / 18)
    with pytest.raises(ValueError):
        RieszParams(2, 1.0, 1.5, 5.0)


def test_zero_and_positivity():
    f = indicator(32)
    assert np.all(riesz_potential(f.with_data(np.zeros((32, 32))), 1.0).data == 0)
    rng = np.random.default_rng(1)
    P = riesz_potential(f.with_data(rng.uniform(0, 1, (32, 32))), 0.7)
    assert np.all(P.data >= 0)
    with pytest.raises(ValueError):
        riesz_potential(f, 2.0)


@pytest.mark.parametrize("n", [128, 256])
def test_indicator_potential_at_centre(n):
    # the four cells around the origin straddle it; their mean approaches 2 pi at O(h)
    f = indicator(n)
    P = riesz_potential(f, 1.0).data
    c = n // 2
    val = P[c - 1:c + 1, c - 1:c + 1].mean()
    assert val == pytest.approx(2 * math.pi, abs=4.0 / n)


def test_fft_matches_direct_away_from_support():
    f = indicator(64, R=0.3)
    X, Y = f.coords()
    P = riesz_potential(f, 0.6).data
    far = np.hypot(X, Y) > 0.5
    direct = riesz_potential_direct(f, 0.6, X[far], Y[far])
    assert np.max(np.abs(direct - P[far])) < 1e-12 * np.max(P)


def test_translation_equivariance():
    n = 64
    g = GridField2D(np.zeros((n, n)), 1.0 / 16)
    X, Y = g.coords()
    a = g.with_data(np.exp(-((X - 0.3) ** 2 + Y ** 2) * 20))
    b = g.with_data(np.roll(a.data, (3, 5), axis=(0, 1)))
    Pa, Pb = riesz_potential(a, 1.0).data, riesz_potential(b, 1.0).data
    # compare away from the window edge the roll wraps across
    assert np.max(np.abs(np.roll(Pa, (3, 5), axis=(0, 1))[10:-10, 10:-10] - Pb[10:-10, 10:-10])) < 1e-10


def test_dilation_invariance():
    p = RieszParams.from_q(1.5)
    base = hls_ratio(indicator(96), p).ratio
    for lam in (0.5, 2.0):
        f = indicator(96, R=lam, h=2.0 * lam / 96)
        assert hls_ratio(f, p).ratio == pytest.approx(base, rel=1e-6)


def test_window_growth_stability():
    p = RieszParams.from_q(1.5)
    f = indicator(96)
    a = hls_ratio(f, p, window_factor=3).ratio
    b = hls_ratio(f, p, window_factor=5).ratio
    assert a == pytest.approx(b, rel=1e-2)


def test_growth_as_q_decreases_to_one():
    f = indicator(96)
    qs = [1.1, 1.3, 1.5, 1.8]
    ratios = [hls_ratio(f, RieszParams.from_q(q)).ratio for q in qs]
    slope = loglog_slope([q - 1 for q in qs[:2]], ratios[:2])
    assert slope >= -0.5


def test_growth_in_s_and_calibration():
    f = indicator(96)
    reps = [hls_ratio(f, RieszParams.from_s(s)) for s in (4, 8, 16, 32, 64)]
    assert loglog_slope([r.params.s for r in reps], [r.ratio for r in reps]) <= 0.6
    C = calibrate_constant(reps)
    checked = [hls_ratio(f, r.params, C_calibrated=C) for r in reps]
    assert all(r.within_bound for r in checked)


def test_zero_source_rejected():
    with pytest.raises(ValueError, match="zero source"):
        hls_ratio(indicator(16).with_data(np.zeros((16, 16))), RieszParams.from_q(1.5))
