import math

import numpy as np
import pytest

from hexflow.atwstep import ALPHA_HEX
from hexflow.errors import InvalidHexagon, NonUniqueVelocity
from hexflow.hexgeom import WulffHexagon, side_lengths_from_s
from hexflow.lattice import SQRT3
from hexflow.limitode import (
    crystalline_extinction_time,
    crystalline_regular_L,
    gamma_limit_check,
    integrate_crystalline,
    integrate_quantized,
    regular_extinction_time,
)


def euler_quantized(s0, gamma, t_end, dt):
    """Fixed-step oracle with the floor law evaluated at the start of each step."""
    s = [float(v) for v in s0]
    ag = ALPHA_HEX * gamma
    t = 0.0
    while t < t_end - 1e-15:
        h = min(dt, t_end - t)
        L = [2 / SQRT3 * (s[i - 1] + s[(i + 1) % 6] - s[i]) for i in range(6)]
        m = [math.floor(ag / Li) for Li in L]
        s = [s[i] - h * SQRT3 / 2 * m[i] / gamma for i in range(6)]
        t += h
    return np.array(s)


def staircase_time(L0, gamma, n_levels=200000):
    """Extinction time by explicit summation over the levels of a regular hexagon."""
    ag = ALPHA_HEX * gamma
    n = math.floor(ag / L0)
    T = gamma * (L0 - ag / (n + 1)) / n
    for k in range(n + 1, n + n_levels):
        T += gamma * (ag / k - ag / (k + 1)) / k
    # the remaining tail is below ag gamma / n_levels^2
    return T


@pytest.mark.parametrize("L0,gamma", [(1.0, 1.0), (1.6, 1.0), (0.3, 0.5), (1.0, 10.0)])
def test_regular_extinction_time_is_level_sum(L0, gamma):
    assert abs(regular_extinction_time(L0, gamma) - staircase_time(L0, gamma)) < 1e-8 * gamma**2


def test_regular_extinction_pinned():
    assert regular_extinction_time(2.0, 1.0) == math.inf


def test_regular_trajectory_matches_closed_form():
    h = WulffHexagon.regular_from_side(1.6)
    tr = integrate_quantized(h.s, 1.0)
    assert tr.terminal == "Extinction"
    assert abs(tr.extinction_time - regular_extinction_time(1.6, 1.0)) < 1e-12
    assert abs(tr.knots[-1] - tr.extinction_time) < 1e-12
    # first level: x = 1.11, so the side shrinks at unit rate until alpha / 2
    t1 = 1.6 - ALPHA_HEX / 2
    assert abs(tr.L_at(t1)[0] - ALPHA_HEX / 2) < 1e-12


@pytest.mark.parametrize("L", [(1.0, 1.4, 0.8), (0.9, 1.2, 1.5), (1.3, 0.6, 0.6)])
def test_event_driven_matches_fixed_step(L):
    h = WulffHexagon.symmetric_from_sides(*L)
    t_end = 0.15
    tr = integrate_quantized(h.s, 1.0, t_max=t_end)
    dt = 2e-6
    oracle = euler_quantized(h.s, 1.0, t_end, dt)
    assert np.abs(tr(t_end) - oracle).max() < 50 * dt


def test_events_sit_on_integers():
    h = WulffHexagon.symmetric_from_sides(1.0, 1.4, 0.8)
    tr = integrate_quantized(h.s, 1.0, t_max=0.3)
    level_events = [e for e in tr.events if e.kind == "level"]
    assert level_events
    for e in level_events:
        L = tr.L_at(e.t)
        for i in e.sides:
            x = ALPHA_HEX / L[i - 1]
            assert abs(x - round(x)) < 1e-9


def test_events_match_dense_sampling():
    h = WulffHexagon.symmetric_from_sides(1.0, 1.4, 0.8)
    tr = integrate_quantized(h.s, 1.0, t_max=0.1)
    tt = np.linspace(0, 0.1, 100001)
    L = np.array([side_lengths_from_s(v) for v in tr(tt)])
    lev = np.floor(ALPHA_HEX / L + 1e-12)
    jumps = tt[1:][np.any(lev[1:] != lev[:-1], axis=1)]
    ev = np.array([e.t for e in tr.events if e.kind == "level" and e.t <= 0.1])
    for tj in jumps:
        assert np.min(np.abs(ev - tj)) <= 2e-6


def test_piecewise_linear_between_events():
    h = WulffHexagon.symmetric_from_sides(0.9, 1.2, 1.5)
    tr = integrate_quantized(h.s, 1.0, t_max=0.2)
    k = tr.knots
    for a, b in zip(k[:-1], k[1:]):
        if b - a < 1e-9:
            continue
        mid = tr(0.5 * (a + b))
        assert np.allclose(mid, 0.5 * (tr(a) + tr(b)), atol=1e-12)


def test_pinned_and_partial():
    tr = integrate_quantized(WulffHexagon.regular_from_side(2.0).s, 1.0, t_max=1.0)
    assert tr.terminal == "Pinned"
    assert np.allclose(tr(1.0), tr(0.0))
    h = WulffHexagon.symmetric_from_sides(8 / 3, 16 / 15, 16 / 15)
    tr = integrate_quantized(h.s, 1.0, t_max=2.0)
    first = next(e for e in tr.events if e.kind == "level")
    assert 0 < first.t < 2.0


def test_plateau_raises():
    # alpha gamma / L = 2 on the first pair of sides, with no consistent level
    h = WulffHexagon.symmetric_from_sides(8 / 9, 1.2, 2.0)
    with pytest.raises(NonUniqueVelocity) as info:
        integrate_quantized(h.s, 1.0)
    lo, hi = info.value.interval
    assert lo < hi <= 0
    # a regular hexagon of side alpha gamma may also wait on its plateau
    with pytest.raises(NonUniqueVelocity):
        integrate_quantized(WulffHexagon.regular_from_side(ALPHA_HEX).s, 1.0)


def test_plateau_hold():
    reg = WulffHexagon.regular_from_side(ALPHA_HEX)
    tr = integrate_quantized(reg.s, 1.0, on_plateau="hold", release_time=0.5)
    assert np.allclose(tr(0.5), reg.s)
    assert tr.terminal == "Extinction"
    assert abs(tr.extinction_time - 0.5 - regular_extinction_time(ALPHA_HEX * (1 - 1e-13), 1.0)) < 1e-9
    h = WulffHexagon.symmetric_from_sides(8 / 9, 1.2, 2.0)
    tr = integrate_quantized(h.s, 1.0, on_plateau="hold", t_max=0.05)
    assert any(e.kind == "plateau" for e in tr.events)


def test_invalid_inputs():
    with pytest.raises(InvalidHexagon):
        integrate_quantized((2, 1, 1, 2, 1, 1), 1.0)
    with pytest.raises(ValueError):
        integrate_quantized(WulffHexagon.regular(1.0).s, 1.0, on_plateau="wait")
    with pytest.raises(InvalidHexagon):
        integrate_crystalline([1.0, 0.0, 1.0, 1.0, 0.0, 1.0])


def test_crystalline_regular_closed_form():
    sol = integrate_crystalline(1.0)
    assert abs(sol.extinction_time - 9 / 32) < 1e-15
    assert abs(crystalline_extinction_time(1.0) - 9 / 32) < 1e-15
    t = np.linspace(0, 0.25, 7)
    assert np.allclose(crystalline_regular_L(1.0, t), np.sqrt(1 - 2 * ALPHA_HEX * t))


def test_crystalline_numeric_matches_closed_form():
    sol = integrate_crystalline(1.0, closed_form=False)
    assert abs(sol.extinction_time - 9 / 32) < 1e-8
    t = np.linspace(0, 0.25, 11)
    L = np.array([side_lengths_from_s(v) for v in sol(t)])
    assert np.allclose(L, crystalline_regular_L(1.0, t)[:, None], atol=1e-8)


def test_crystalline_nonregular_area_rate():
    # the area of a hexagon under the crystalline flow with natural mobility drops at a constant rate
    L = [1.0, 1.4, 0.8, 1.0, 1.4, 0.8]
    sol = integrate_crystalline(L, t_max=0.1)

    def area(s):
        Ls = side_lengths_from_s(s)
        return 0.5 * float(np.dot(s, Ls))

    t = np.linspace(0, 0.1, 6)
    A = np.array([area(v) for v in sol(t)])
    rate = np.diff(A) / np.diff(t)
    assert np.allclose(rate, rate[0], rtol=1e-7)
    assert abs(rate[0] + 16 / SQRT3) < 1e-6


def test_gamma_limit_rows():
    rows = gamma_limit_check(1.0, [10, 100, 1000, 10000])
    errs = [abs(r["rel_error"]) for r in rows]
    assert errs == sorted(errs, reverse=True)
    for r in rows:
        assert abs(r["rel_error"]) <= r["bound"]
        assert r["T_crystalline"] == 9 / 32
    with pytest.raises(ValueError):
        gamma_limit_check(2.0, [1.0])
