import itertools
import math

import numpy as np
import pytest

from hexflow.atwstep import (
    ALPHA_HEX,
    ALPHA_HEX_EXACT,
    StepPlan,
    apply_plan,
    brute_force_step,
    full_minimizer,
    minimizers_bruteforce,
    optimal_layers,
    pinning_threshold,
    plan_energy,
    reduced_energy,
    side_energy,
)
from hexflow.discrete import DiscreteHexagon, discretize, step_energy
from hexflow.errors import SearchTruncated, SideVanished
from hexflow.hexgeom import WulffHexagon
from hexflow.lattice import SQRT3


def test_alpha_value():
    assert ALPHA_HEX == 16 / 9
    assert ALPHA_HEX_EXACT.numerator == 16 and ALPHA_HEX_EXACT.denominator == 9
    assert pinning_threshold(2.0) == 32 / 9


def test_reduced_energy_is_sum_of_sides():
    L = [0.3, 0.5, 0.7, 0.3, 0.5, 0.7]
    N = [1, 2, 0, 3, 1, 1]
    total = sum(side_energy(n, l, 1.3, 0.05) for n, l in zip(N, L))
    assert abs(reduced_energy(N, L, 1.3, 0.05) - total) < 1e-15


def test_reduced_energy_is_exact_perimeter_change_plus_band_dissipation():
    # for a single removed row the exact and reduced energies differ only by the corner cells
    eps, gamma = 0.05, 1.0
    E = DiscreteHexagon(eps, (20,) * 6)
    N = (1, 0, 0, 0, 0, 0)
    exact = plan_energy(E, N, gamma) - E.perimeter
    reduced = reduced_energy(N, E.L, gamma, eps)
    # the row along side one has M+1 cells of depth one, the reduced model uses L = eps (M + 2/3)
    assert abs(exact - reduced - SQRT3 * eps * 3 / (8 * gamma) * (eps / 3)) < 1e-12


@pytest.mark.parametrize("x", [0.2, 0.9, 1.3, 2.7, 3.5, 5.99])
def test_optimal_layers_is_floor(x):
    gamma, eps = 1.0, 0.01
    L = ALPHA_HEX * gamma / x
    plan = optimal_layers([L] * 6, gamma, eps, tie_window=0.0)
    assert plan.N == (math.floor(x),) * 6
    assert minimizers_bruteforce(L, gamma, eps) == [math.floor(x)]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_integer_ratio_has_two_minimizers(n):
    gamma, eps = 0.75, 0.01
    L = ALPHA_HEX * gamma / n
    assert minimizers_bruteforce(L, gamma, eps, rtol=1e-9) == [n - 1, n]
    lo = optimal_layers([L] * 6, gamma, eps, tie_policy="lower")
    hi = optimal_layers([L] * 6, gamma, eps, tie_policy="upper")
    assert lo.N == (n - 1,) * 6 and hi.N == (n,) * 6
    assert lo.tie == (True,) * 6 and lo.tie_mask == 63
    alt0 = optimal_layers([L] * 6, gamma, eps, tie_policy="alternate", step=0)
    alt1 = optimal_layers([L] * 6, gamma, eps, tie_policy="alternate", step=1)
    assert alt0.N != alt1.N


def test_tie_window_is_near_integers_only():
    gamma, eps = 1.0, 0.01
    near = ALPHA_HEX / (2 + 0.5 * eps)
    far = ALPHA_HEX / (2 + 3 * eps)
    plan = optimal_layers([near, far, 1.0, near, far, 1.0], gamma, eps, tie_window=1.0)
    assert plan.tie == (True, False, False, True, False, False)
    assert plan.N[1] == 2


def test_optimal_layers_validation():
    with pytest.raises(ValueError):
        optimal_layers([1.0] * 5, 1.0, 0.1)
    with pytest.raises(ValueError):
        optimal_layers([1.0, 0, 1, 1, 1, 1], 1.0, 0.1)
    with pytest.raises(ValueError):
        optimal_layers([1.0] * 6, 1.0, 0.1, tie_policy="random")
    with pytest.raises(ValueError):
        StepPlan((1, 0, 0, 0, 0, -1), (False,) * 6, 1.0, 0.1)


def test_apply_plan_side_and_support_changes():
    eps = 0.1
    E = DiscreteHexagon(eps, (9, 7, 8, 9, 7, 8))
    N = (1, 0, 2, 1, 1, 0)
    F = apply_plan(E, StepPlan(N, (False,) * 6, 1.0, eps))
    Nv = np.array(N)
    assert np.allclose(F.s, E.s - SQRT3 / 2 * eps * Nv)
    dL = (Nv - np.roll(Nv, 1) - np.roll(Nv, -1)) * eps
    assert np.allclose(F.L - E.L, dL)
    assert apply_plan(E, StepPlan.zero(1.0, eps)) is E


def test_apply_plan_vanishing_side():
    E = DiscreteHexagon(0.1, (3, 1, 3, 3, 1, 3))
    assert E.M[1] == 5 and E.M[0] == 1
    with pytest.raises(SideVanished) as info:
        apply_plan(E, StepPlan((0, 3, 0, 0, 3, 0), (False,) * 6, 1.0, 0.1))
    assert info.value.side in (1, 3, 4, 6)


def test_plan_energy_matches_step_energy():
    eps, gamma = 0.1, 0.5
    E = DiscreteHexagon(eps, (8, 6, 7, 8, 6, 7))
    for N in [(0,) * 6, (1, 0, 1, 1, 0, 1), (2, 1, 0, 2, 1, 0), (3, 3, 3, 3, 3, 3)]:
        F = E.shifted(N)
        want = step_energy(F.as_cellset(), E.as_cellset(), gamma * eps)
        assert abs(plan_energy(E, N, gamma) - want) < 1e-12


def test_brute_force_is_true_minimum_over_symmetric_plans():
    eps, gamma = 0.1, 0.5
    E = DiscreteHexagon(eps, (8, 6, 7, 8, 6, 7))
    best = min(
        (step_energy(E.shifted(n + n).as_cellset(), E.as_cellset(), gamma * eps), n + n)
        for n in itertools.product(range(4), repeat=3)
    )
    r = brute_force_step(E, gamma, max_layers=3)
    assert abs(r.energy - best[0]) < 1e-12
    assert r.plan.N == best[1]
    hexagon, plan, energy = r
    assert hexagon == E.shifted(plan.N)


def test_symmetric_search_matches_full_search():
    E = DiscreteHexagon(0.1, (8, 6, 7, 8, 6, 7))
    a = brute_force_step(E, 0.5, max_layers=3)
    b = brute_force_step(E, 0.5, max_layers=3, symmetric=False)
    assert a.plan.N == b.plan.N
    assert a.energy == b.energy


@pytest.mark.parametrize("P,gamma", [
    ((8,) * 6, 0.5),
    ((8, 6, 7, 8, 6, 7), 0.5),
    ((9, 6, 8, 9, 6, 8), 0.4),
    ((8, 5, 7, 9, 6, 6), 0.5),
])
def test_minimizer_among_all_sets_is_a_hexagon(P, gamma):
    E = DiscreteHexagon(0.1, P)
    r = brute_force_step(E, gamma, max_layers=3, symmetric=E.is_origin_symmetric)
    cells, energy = full_minimizer(E.as_cellset(), gamma)
    assert cells == r.hexagon.cells
    assert abs(energy - r.energy) < 1e-9


def test_search_truncated_when_bound_reached():
    E = DiscreteHexagon(0.02, (40,) * 6)  # x = alpha gamma / L is about 2.2
    with pytest.raises(SearchTruncated):
        brute_force_step(E, 1.0, max_layers=1)
    assert brute_force_step(E, 1.0, max_layers=4).plan.N == (2,) * 6


@pytest.mark.parametrize("gamma", [0.5, 1.0])
def test_pinning_threshold_for_both_steppers(gamma):
    eps = gamma / 64
    above = WulffHexagon.regular_from_side(1.05 * ALPHA_HEX * gamma)
    below = WulffHexagon.regular_from_side(0.95 * ALPHA_HEX * gamma)
    Ea, Eb = discretize(above, eps), discretize(below, eps)
    assert optimal_layers(Ea.L, gamma, eps).is_zero
    assert not optimal_layers(Eb.L, gamma, eps).is_zero
    assert brute_force_step(Ea, gamma, max_layers=2).plan.is_zero
    assert not brute_force_step(Eb, gamma, max_layers=2).plan.is_zero


def test_exact_first_row_threshold():
    # one row from every side of a regular hexagon pays off iff L < alpha gamma + (2/3) eps
    gamma, eps = 1.0, 1 / 32
    for M in range(50, 60):
        E = DiscreteHexagon(eps, (M,) * 6)
        gain = plan_energy(E, (1,) * 6, gamma) - plan_energy(E, (0,) * 6, gamma)
        assert (gain < 0) == (E.L[0] < ALPHA_HEX * gamma + 2 / 3 * eps - 1e-12)


def test_empty_set_candidate():
    # a small hexagon whose exact step energy keeps falling past the search box down to the empty set
    E = discretize(WulffHexagon.symmetric_from_sides(0.7, 0.7, 0.7), 1 / 16)
    energies = [plan_energy(E, (n,) * 6, 1.0) for n in range(7)]
    assert min(energies) == energies[4]
    r = brute_force_step(E, 1.0, max_layers=6)
    assert r.hexagon is None and r.edges == 0
    cells, energy = full_minimizer(E.as_cellset(), 1.0)
    assert not cells
    assert abs(r.energy - energy) < 1e-9
    assert r.energy < energies[4]
    with pytest.raises(SideVanished):
        apply_plan(E, r.plan)
