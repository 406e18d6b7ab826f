from __future__ import annotations

import functools

import pytest

from vortex_moser.biot_savart import velocity_series
from vortex_moser.flows import RadialVorticity, advect, make_grid, radial_velocity

ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@functools.lru_cache(maxsize=None)
def lamb_oseen_series(n: int):
    """(u, omega) advected over [-0.5, 0], 8 slices, on the unit disk."""
    grid = make_grid(n, 1.0, 1.0)
    _, w = radial_velocity(RadialVorticity.lamb_oseen(1.0, 0.005, 1.0), grid)
    W = advect(w, 0.5 / 49, 49, record_every=7, t0=-0.5)
    return velocity_series(W), W


@pytest.fixture(scope="session")
def demo_128():
    return lamb_oseen_series(128)


@pytest.fixture(scope="session")
def demo_256():
    return lamb_oseen_series(256)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    by_crit: dict[int, list] = {}
    for crit, part, ok, detail in ACCEPTANCE:
        by_crit.setdefault(crit, []).append((part, ok, detail))
    for crit in sorted(by_crit):
        parts = by_crit[crit]
        ok = all(p[1] for p in parts)
        failed = "; ".join(f"{p[0]}: {p[2]}" for p in parts if not p[1])
        passed = "; ".join(f"{p[0]}: {p[2]}" for p in parts if p[1])
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  " + (failed or passed))
