"""Discrete minimizing-movement evolution of Wulff-like hexagons.

Step ``k`` maps ``E_k`` to ``E_{k+1}`` at time step ``tau = gamma * eps``.
The evolution is carried on the integer row offsets of
:class:`~hexflow.discrete.DiscreteHexagon`, so every support distance moves
by an exact multiple of ``(sqrt3/2) eps``; cell sets are only built when an
energy is requested.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .atwstep import (
    ALPHA_HEX,
    DEFAULT_TIE_WINDOW,
    StepPlan,
    apply_plan,
    brute_force_step,
    optimal_layers,
)
from .discrete import CELL_AREA_FACTOR, DiscreteHexagon, discretize
from .errors import ConfigError, InvalidHexagon, SearchTruncated, SideVanished
from .hexgeom import WulffHexagon, hausdorff_distance
from .lattice import SQRT3
from .limitode import crystalline_extinction_time

STEPPERS = ("closed_form", "brute_force")


@dataclass(frozen=True)
class StepRecord:
    """State ``E_k`` at ``t = k tau`` together with the plan applied to it."""

    k: int
    t: float
    P: tuple
    s: tuple
    L: tuple
    N: tuple
    tie: tuple
    perimeter: float
    step_energy: float

    @property
    def tie_mask(self) -> int:
        return sum(1 << i for i, flag in enumerate(self.tie) if flag)


@dataclass(frozen=True)
class Terminal:
    kind: str  # "Pinned", "SideVanished", "MaxSteps"
    step: int
    side: int | None = None

    def __str__(self):
        return f"SideVanished({self.side})" if self.kind == "SideVanished" else self.kind


@dataclass
class Trajectory:
    eps: float
    gamma: float
    records: list = field(default_factory=list)
    terminal: Terminal | None = None
    branch: tuple = ()

    @property
    def tau(self) -> float:
        return self.gamma * self.eps

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def s_array(self) -> np.ndarray:
        return np.array([r.s for r in self.records])

    @property
    def L_array(self) -> np.ndarray:
        return np.array([r.L for r in self.records])

    @property
    def N_array(self) -> np.ndarray:
        return np.array([r.N for r in self.records], dtype=np.int64)

    @property
    def end_time(self) -> float:
        """Time at which the evolution stops: one step past the last record unless pinned."""
        if not self.records:
            return 0.0
        if self.terminal is not None and self.terminal.kind == "SideVanished":
            return self.records[-1].t + self.tau
        return self.records[-1].t

    def hexagon(self, k: int) -> DiscreteHexagon:
        return DiscreteHexagon(self.eps, self.records[k].P)


def _check_initial(E0: WulffHexagon, eps: float, strict: bool) -> DiscreteHexagon:
    if not eps > 0:
        raise ConfigError("eps", "must be positive")
    if not E0.is_origin_symmetric:
        raise ConfigError("initial", "the initial hexagon must be origin-symmetric")
    if E0.is_degenerate:
        raise ConfigError("initial", "the initial hexagon must have six sides of positive length")
    try:
        E = discretize(E0, eps)
    except Exception as exc:  # EmptyDiscretization
        raise ConfigError("eps", f"no cell fits into the initial hexagon ({exc})") from exc
    if strict:
        d = hausdorff_distance(E.envelope, E0)
        if not d < eps:
            raise ConfigError("eps", f"envelope of the discretization is {d:.3g} away from the datum, not below eps")
    return E


def default_t_max(E0: WulffHexagon) -> float:
    """Four times the crystalline extinction time of the largest centred regular hexagon inside ``E0``."""
    L_in = 2.0 / SQRT3 * min(E0.s)
    return 4.0 * crystalline_extinction_time(L_in)


def removal_energy(E: DiscreteHexagon, N, gamma: float) -> float:
    """Step energy of ``E`` with ``N_i`` rows removed, relative to ``E``."""
    units = E.removal_depth_units(N)
    eps = E.eps
    P = [p - n for p, n in zip(E.P, N)]
    try:
        per = DiscreteHexagon(eps, P).perimeter
    except Exception:
        per = 0.0
    return per + CELL_AREA_FACTOR * eps / gamma * 0.75 * eps * units


def _plan_for(E, gamma, stepper, tie_window, tie_policy, k, max_layers):
    if stepper == "closed_form":
        return optimal_layers(E.L, gamma, E.eps, tie_window=tie_window, tie_policy=tie_policy, step=k)
    # honour the search precondition, then widen until the minimizer is interior
    layers = max(max_layers, math.floor(ALPHA_HEX * gamma / min(E.L)) + 2)
    cap = 2 * max(E.P) + 2
    while True:
        try:
            res = brute_force_step(E, gamma, max_layers=layers)
            break
        except SearchTruncated:
            if layers >= cap:
                raise
            layers = min(2 * layers, cap)
    # report the closed-form tie flags next to the exact choice
    ties = optimal_layers(E.L, gamma, E.eps, tie_window=tie_window).tie
    return StepPlan(res.plan.N, ties, gamma, E.eps)


def run(E0: WulffHexagon, eps: float, gamma: float, t_max: float | None = None,
        stepper: str = "closed_form", tie_window: float = DEFAULT_TIE_WINDOW,
        tie_policy: str = "lower", max_layers: int = 6, compute_energy: bool = True,
        strict_initial: bool = True, max_steps: int | None = None,
        forced: dict | None = None) -> Trajectory:
    """Iterate the scheme from the discretization of ``E0`` until pinning, side vanishing or ``t_max``.

    ``forced`` maps step indices to plans and overrides the stepper there;
    it is how :func:`run_branches` explores tie alternatives.
    """
    if stepper not in STEPPERS:
        raise ConfigError("stepper", f"expected one of {STEPPERS}")
    if not gamma > 0:
        raise ConfigError("gamma", "must be positive")
    E = _check_initial(E0, eps, strict_initial)
    if t_max is None:
        t_max = default_t_max(E0)
    tau = gamma * eps
    n_steps = math.floor(t_max / tau + 1e-9)
    if max_steps is not None:
        n_steps = min(n_steps, max_steps)
    traj = Trajectory(eps=eps, gamma=gamma)
    k = 0
    while True:
        if forced and k in forced:
            base = _plan_for(E, gamma, "closed_form", tie_window, tie_policy, k, max_layers)
            plan = StepPlan(forced[k], base.tie, gamma, eps)
        else:
            plan = _plan_for(E, gamma, stepper, tie_window, tie_policy, k, max_layers)
        energy = removal_energy(E, plan.N, gamma) if compute_energy else math.nan
        traj.records.append(StepRecord(
            k=k, t=k * tau, P=E.P, s=tuple(float(v) for v in E.s), L=tuple(float(v) for v in E.L),
            N=plan.N, tie=plan.tie, perimeter=E.perimeter, step_energy=energy,
        ))
        if plan.is_zero and (not any(plan.tie) or stepper == "brute_force"):
            traj.terminal = Terminal("Pinned", k)
            return traj
        if plan.is_zero and tie_policy == "lower":
            # the lower choice repeats forever from an unchanged state
            traj.terminal = Terminal("Pinned", k)
            return traj
        if k >= n_steps:
            traj.terminal = Terminal("MaxSteps", k)
            return traj
        try:
            E = apply_plan(E, plan)
        except SideVanished as exc:
            traj.terminal = Terminal("SideVanished", k, exc.side)
            return traj
        k += 1


def run_branches(E0: WulffHexagon, eps: float, gamma: float, horizon: int, max_branches: int = 64,
                 **kwargs) -> list[Trajectory]:
    """All trajectories obtained by taking either tie alternative, for ``horizon`` steps.

    Symmetric pairs of sides are switched together so that every branch stays
    origin-symmetric.  Enumeration stops once ``max_branches`` is reached.
    """
    kwargs = dict(kwargs)
    kwargs.pop("forced", None)
    kwargs.pop("max_steps", None)
    done, todo = [], [dict()]
    while todo and len(done) + len(todo) <= max_branches:
        forced = todo.pop(0)
        traj = run(E0, eps, gamma, forced=forced, max_steps=horizon, **kwargs)
        traj.branch = tuple(sorted(forced.items()))
        done.append(traj)
        start = max(forced) + 1 if forced else 0
        for rec in traj.records[start:]:
            pairs = [p for p in range(3) if rec.tie[p] and rec.tie[p + 3]]
            if not pairs:
                continue
            for r in range(1, len(pairs) + 1):
                for subset in itertools.combinations(pairs, r):
                    alt = list(rec.N)
                    for i in subset:
                        n = math.floor(ALPHA_HEX * gamma / rec.L[i] + 0.5)
                        alt[i] = alt[i + 3] = n if rec.N[i] == n - 1 else n - 1
                    todo.append({**forced, rec.k: tuple(alt)})
            break
    return done


# --------------------------------------------------------------------------
# interpolants


class AffineInterpolant:
    """Continuous piecewise-affine ``s(t)`` and ``L(t)`` through the records."""

    def __init__(self, traj: Trajectory, extend_to_end: bool = True):
        if not traj.records:
            raise ValueError("empty trajectory")
        t = list(traj.times)
        S = [list(r.s) for r in traj.records]
        if extend_to_end and traj.terminal is not None and traj.terminal.kind == "SideVanished":
            last = traj.records[-1]
            t.append(last.t + traj.tau)
            S.append([s - SQRT3 / 2.0 * traj.eps * n for s, n in zip(last.s, last.N)])
        self.knots = np.array(t)
        self.S = np.array(S)

    def s(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.knots, self.S[:, i]) for i in range(6)], axis=-1)

    def L(self, t):
        s = self.s(t)
        return (2.0 / SQRT3) * (np.roll(s, 1, axis=-1) + np.roll(s, -1, axis=-1) - s)

    def __call__(self, t):
        return self.s(t), self.L(t)


def interpolate_affine(traj: Trajectory) -> AffineInterpolant:
    return AffineInterpolant(traj)


def interpolate_constant(traj: Trajectory):
    """Piecewise-constant ``s^tau(t) = s_{floor(t / tau)}``."""
    S = traj.s_array
    tau = traj.tau

    def s_tau(t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.floor(t / tau + 1e-12).astype(int), 0, len(S) - 1)
        return S[k]

    return s_tau


def sup_gap(interp: AffineInterpolant, reference, t_end: float) -> float:
    """``sup_{[0, t_end]} max_i |s_interp - s_ref|`` for piecewise-affine data.

    If ``reference`` exposes ``knots`` the difference is piecewise affine on
    the union of knots and the supremum is exact; otherwise a fine grid is
    added.
    """
    pts = [interp.knots]
    ref_knots = getattr(reference, "knots", None)
    if ref_knots is not None:
        pts.append(np.asarray(ref_knots))
    else:
        pts.append(np.linspace(0.0, t_end, 20001))
    t = np.unique(np.concatenate(pts + [np.array([0.0, t_end])]))
    t = t[(t >= 0.0) & (t <= t_end)]
    diff = np.abs(interp.s(t) - np.asarray(reference(t)))
    return float(diff.max())


def convergence_study(E0: WulffHexagon, gamma: float, eps_list, reference, window: float = 0.9,
                      T_ref: float | None = None, **run_kwargs) -> list[dict]:
    """Sup-norm gaps between ``s_bar^eps`` and ``reference`` on ``[0, window * T_ref]``."""
    if T_ref is None:
        T_ref = getattr(reference, "extinction_time", None)
    if T_ref is None or not math.isfinite(T_ref):
        raise ConfigError("reference", "a finite extinction time is needed to set the window")
    t_end = window * T_ref
    rows = []
    for eps in eps_list:
        traj = run(E0, eps, gamma, t_max=max(t_end, 1.5 * T_ref), compute_energy=False, **run_kwargs)
        interp = interpolate_affine(traj)
        covered = min(t_end, float(interp.knots[-1]))
        gap = sup_gap(interp, reference, covered)
        ties = sum(1 for r in traj.records if any(r.tie))
        rows.append({
            "eps": float(eps),
            "gap": gap,
            "gap_over_eps": gap / eps,
            "t_end": covered,
            "steps": len(traj.records),
            "tie_steps": ties,
            "T_discrete": traj.end_time,
            "T_reference": float(T_ref),
            "terminal": str(traj.terminal),
        })
    return rows


__all__ = [
    "Trajectory",
    "StepRecord",
    "Terminal",
    "run",
    "run_branches",
    "interpolate_affine",
    "interpolate_constant",
    "convergence_study",
    "sup_gap",
    "default_t_max",
]
