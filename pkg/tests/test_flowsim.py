import math

import numpy as np
import pytest

from hexflow.atwstep import ALPHA_HEX, plan_energy
from hexflow.discrete import DiscreteHexagon, discretize
from hexflow.errors import ConfigError
from hexflow.flowsim import (
    convergence_study,
    default_t_max,
    interpolate_affine,
    interpolate_constant,
    removal_energy,
    run,
    run_branches,
    sup_gap,
)
from hexflow.hexgeom import WulffHexagon, hausdorff_distance
from hexflow.lattice import SQRT3
from hexflow.limitode import crystalline_extinction_time, integrate_quantized


def test_pinned_from_start():
    E0 = WulffHexagon.regular_from_side(3.0)
    traj = run(E0, 1 / 64, 1.0)
    assert traj.terminal.kind == "Pinned"
    assert len(traj.records) == 1
    assert traj.records[0].N == (0,) * 6


def test_shrinking_regular_hexagon_vanishes():
    E0 = WulffHexagon.regular_from_side(1.6)
    traj = run(E0, 1 / 32, 1.0)
    assert traj.terminal.kind == "SideVanished"
    S = traj.s_array
    assert np.all(np.diff(S, axis=0) <= 1e-15)
    # every step keeps the hexagon symmetric
    assert np.allclose(S[:, :3], S[:, 3:])
    assert str(traj.terminal).startswith("SideVanished(")
    assert abs(traj.end_time - traj.times[-1] - traj.tau) < 1e-15


def test_records_follow_plans():
    E0 = WulffHexagon.symmetric_from_sides(1.0, 1.4, 0.8)
    traj = run(E0, 1 / 32, 1.0)
    for a, b in zip(traj.records, traj.records[1:]):
        N = np.array(a.N)
        assert np.allclose(np.array(b.s), np.array(a.s) - SQRT3 / 2 * traj.eps * N)
        assert np.allclose(np.array(b.L) - np.array(a.L), traj.eps * (N - np.roll(N, 1) - np.roll(N, -1)))
        assert abs(b.t - a.t - traj.tau) < 1e-15


def test_removal_energy_is_exact_step_energy():
    E = DiscreteHexagon(0.1, (8, 6, 7, 8, 6, 7))
    for N in [(0,) * 6, (1, 1, 1, 1, 1, 1), (2, 0, 1, 2, 0, 1)]:
        assert abs(removal_energy(E, N, 0.5) - plan_energy(E, N, 0.5)) < 1e-12


def test_brute_force_energy_never_exceeds_perimeter():
    E0 = WulffHexagon.symmetric_from_sides(1.0, 1.2, 0.9)
    traj = run(E0, 1 / 16, 1.0, stepper="brute_force")
    for r in traj.records:
        assert r.step_energy <= r.perimeter + 1e-12
    for a, b in zip(traj.records, traj.records[1:]):
        assert b.perimeter <= a.step_energy + 1e-12


def test_steppers_agree_on_pinned_data():
    E0 = WulffHexagon.symmetric_from_sides(2.5, 3.0, 2.2)
    a = run(E0, 1 / 16, 1.0)
    b = run(E0, 1 / 16, 1.0, stepper="brute_force")
    assert a.terminal.kind == b.terminal.kind == "Pinned"


def test_max_steps_terminal():
    E0 = WulffHexagon.regular_from_side(1.6)
    traj = run(E0, 1 / 32, 1.0, t_max=0.1)
    assert traj.terminal.kind == "MaxSteps"
    assert len(traj.records) == math.floor(0.1 / traj.tau + 1e-9) + 1


def test_default_t_max():
    E0 = WulffHexagon.regular_from_side(1.0)
    assert abs(default_t_max(E0) - 4 * crystalline_extinction_time(1.0)) < 1e-12


def test_initial_validation():
    with pytest.raises(ConfigError):
        run(WulffHexagon((1.0, 1.1, 1.2, 1.0, 1.1, 1.3)), 0.1, 1.0)
    with pytest.raises(ConfigError):
        run(WulffHexagon((2, 1, 1, 2, 1, 1)), 0.1, 1.0)
    with pytest.raises(ConfigError):
        run(WulffHexagon.regular(1.0), 0.0, 1.0)
    with pytest.raises(ConfigError):
        run(WulffHexagon.regular(1.0), 0.1, -1.0)
    with pytest.raises(ConfigError):
        run(WulffHexagon.regular(1.0), 0.1, 1.0, stepper="nope")
    with pytest.raises(ConfigError):
        run(WulffHexagon.regular(0.05), 0.25, 1.0)


def test_strict_initial_hausdorff():
    # the envelope of the cells stays within eps of the datum even on coarse grids
    E0 = WulffHexagon.regular(1.0)
    for eps in (0.1, 0.3, 0.5, 0.7, 0.9):
        D = discretize(E0, eps)
        assert hausdorff_distance(D.envelope, E0) < eps
        assert run(E0, eps, 1.0, max_steps=0).records


def test_interpolants_hit_the_records():
    traj = run(WulffHexagon.regular_from_side(1.6), 1 / 16, 1.0)
    A = interpolate_affine(traj)
    C = interpolate_constant(traj)
    assert np.allclose(A.s(traj.times), traj.s_array)
    assert np.allclose(C(traj.times + 0.5 * traj.tau)[:-1], traj.s_array[:-1])
    s, L = A(traj.times)
    assert np.allclose(L, traj.L_array)


def test_sup_gap_against_dense_sampling():
    traj = run(WulffHexagon.regular_from_side(1.6), 1 / 16, 1.0)
    A = interpolate_affine(traj)
    ref = integrate_quantized(traj.records[0].s, 1.0)
    t_end = 0.8 * ref.extinction_time
    exact = sup_gap(A, ref, t_end)
    tt = np.linspace(0, t_end, 200001)
    dense = np.abs(A.s(tt) - ref(tt)).max()
    assert dense <= exact + 1e-12
    assert exact - dense < 1e-4


def test_branches_at_ties():
    eps = 1 / 16
    D = DiscreteHexagon(eps, (20,) * 6)
    gamma = D.L[0] / ALPHA_HEX  # x = 1 exactly on every side
    branches = run_branches(D.envelope, eps, gamma, horizon=3)
    assert len(branches) >= 2
    firsts = {b.records[0].N for b in branches}
    assert {(0,) * 6, (1,) * 6} <= firsts
    for b in branches:
        assert np.allclose(b.s_array[:, :3], b.s_array[:, 3:])


def test_convergence_rows():
    E0 = WulffHexagon.regular_from_side(1.6)
    ref = integrate_quantized(E0.s, 1.0)
    rows = convergence_study(E0, 1.0, [1 / 16, 1 / 32], ref)
    assert [r["eps"] for r in rows] == [1 / 16, 1 / 32]
    for r in rows:
        assert r["gap"] >= 0 and r["steps"] > 1
        assert r["terminal"].startswith("SideVanished")
        assert r["T_reference"] == ref.extinction_time
    with pytest.raises(ConfigError):
        convergence_study(E0, 1.0, [1 / 16], ref, T_ref=math.inf)


def test_brute_force_run_ends_when_the_set_vanishes():
    traj = run(WulffHexagon.symmetric_from_sides(0.7, 0.7, 0.7), 1 / 16, 1.0, stepper="brute_force")
    assert traj.terminal.kind == "SideVanished"
    assert len(traj.records) == 1
