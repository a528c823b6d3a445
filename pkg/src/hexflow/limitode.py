"""Limit evolutions of Wulff-like hexagons.

The quantized law ``ds_i/dt = -(sqrt3/(2 gamma)) floor(alpha gamma / L_i)``
has a piecewise constant right-hand side, so it is integrated exactly from
event to event: between events ``s`` and ``L`` are affine and the next event
is the first time some ``alpha gamma / L_i`` reaches an integer.  The
crystalline flow ``ds_i/dt = -(8/(3 sqrt3)) / L_i`` is the comparison law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import polygamma

from .atwstep import ALPHA_HEX
from .errors import InvalidHexagon, NonUniqueVelocity
from .hexgeom import side_lengths_from_s
from .lattice import SQRT3

# Crystalline speed factor phi(n_i) * Lambda(n_i) = (2/sqrt3)(4/3).
CRYSTALLINE_FACTOR = 8.0 / (3.0 * SQRT3)

# Relative tolerance for deciding that alpha*gamma/L_i sits on an integer.
LEVEL_TOL = 1e-10


def _slopes_L(m, gamma):
    m = np.asarray(m, dtype=float)
    return (m - np.roll(m, 1) - np.roll(m, -1)) / gamma


def _slopes_s(m, gamma):
    return -(SQRT3 / (2.0 * gamma)) * np.asarray(m, dtype=float)


@dataclass
class OdeEvent:
    t: float
    kind: str  # "level", "extinction", "plateau", "release"
    sides: tuple = ()
    levels: tuple = ()


@dataclass
class PiecewiseLinearTrajectory:
    """Knots ``t_j`` with states ``s_j``; affine in between.

    ``levels[j]`` is the level vector used on ``[t_j, t_{j+1})``.
    """

    gamma: float
    t: list = field(default_factory=list)
    s: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    events: list = field(default_factory=list)
    terminal: str = "MaxTime"
    extinction_time: float = math.inf

    @property
    def knots(self) -> np.ndarray:
        return np.asarray(self.t)

    @property
    def s_array(self) -> np.ndarray:
        return np.asarray(self.s)

    @property
    def L_array(self) -> np.ndarray:
        return np.array([side_lengths_from_s(v) for v in self.s])

    def __call__(self, t):
        """``s`` at time(s) ``t`` by linear interpolation (clamped to the last knot)."""
        ts = self.knots
        S = self.s_array
        t = np.asarray(t, dtype=float)
        out = np.stack([np.interp(t, ts, S[:, i]) for i in range(6)], axis=-1)
        return out

    def L_at(self, t):
        s = self(t)
        return (2.0 / SQRT3) * (np.roll(s, 1, axis=-1) + np.roll(s, -1, axis=-1) - s)


def regular_extinction_time(L0: float, gamma: float) -> float:
    """Exact extinction time of the quantized flow for a regular hexagon of side ``L0``.

    With ``n = floor(alpha gamma / L0)`` the side shrinks at rate ``n/gamma``
    until ``alpha gamma / (n + 1)``; afterwards level ``k`` lasts
    ``alpha gamma^2 / (k^2 (k + 1))``, and the tail sums to
    ``alpha gamma^2 (psi_1(n + 1) - 1/(n + 1))``.
    """
    ag = ALPHA_HEX * gamma
    n = math.floor(ag / L0 * (1 + LEVEL_TOL))
    if n == 0:
        return math.inf
    first = gamma * (L0 - ag / (n + 1)) / n
    tail = ALPHA_HEX * gamma**2 * (float(polygamma(1, n + 1)) - 1.0 / (n + 1))
    return first + tail


def crystalline_extinction_time(L0: float) -> float:
    """``L0^2 / (2 alpha)`` for a regular hexagon of side ``L0``."""
    return L0 * L0 / (2.0 * ALPHA_HEX)


def _floor_levels(L, gamma):
    x = ALPHA_HEX * gamma / np.asarray(L, dtype=float)
    n = np.floor(x + 0.5)
    on_int = (np.abs(x - n) <= LEVEL_TOL * np.maximum(1.0, x)) & (n >= 1)
    m = np.where(on_int, n, np.floor(x)).astype(np.int64)
    return m, on_int, n.astype(np.int64)


def _consistent_levels(m, on_int, n, gamma):
    """Right-continuous levels for sides sitting on an integer ``n``.

    Level ``n`` needs ``dL/dt <= 0`` afterwards and level ``n - 1`` needs
    ``dL/dt > 0``.  Returns the levels and the sides for which no choice is
    consistent (a sliding mode).
    """
    m = m.copy()
    idx = np.flatnonzero(on_int)
    for _ in range(12):
        changed = False
        dL = _slopes_L(m, gamma)
        for i in idx:
            if m[i] == n[i] and dL[i] > 0:
                m[i] = n[i] - 1
                changed = True
            elif m[i] == n[i] - 1 and dL[i] <= 0:
                m[i] = n[i]
                changed = True
        if not changed:
            break
    dL = _slopes_L(m, gamma)
    sliding = [int(i) for i in idx if (m[i] == n[i]) == (dL[i] > 0)]
    return m, sliding


def _held_levels(m, on_int, n, gamma):
    """Second solution staying on the integer: the sides on ``n`` at level ``n - 1`` with ``dL/dt = 0``."""
    idx = np.flatnonzero(on_int & (m == n))
    if idx.size == 0:
        return None
    alt = m.copy()
    alt[idx] = n[idx] - 1
    if np.all(_slopes_L(alt, gamma)[idx] == 0):
        return alt, [int(i) for i in idx]
    return None


def _sliding_rates(m, sliding, n):
    rates = m.astype(float)
    for _ in range(50):
        for i in sliding:
            rates[i] = min(max(rates[(i - 1) % 6] + rates[(i + 1) % 6], n[i] - 1), n[i])
    return rates


def integrate_quantized(s0, gamma: float, t_max: float = math.inf, max_events: int = 100000,
                        on_plateau: str = "raise", release_time: float = math.inf,
                        level_cap: int = 2000) -> PiecewiseLinearTrajectory:
    """Event-driven integration of the floor-quantized system.

    Levels are right-continuous: at a crossing the new level applies from the
    event time on.  Two situations leave the velocity undetermined by this
    rule, and raise :class:`NonUniqueVelocity` when ``on_plateau="raise"``:

    * some sides on an integer value of ``alpha gamma / L`` may also stay
      there at the lower level (a singular datum that may wait before
      moving);
    * a side on an integer has no consistent level and can only slide.

    With ``on_plateau="hold"`` the first case stays on the plateau until
    ``release_time`` and then follows the right-continuous levels, and the
    second case slides with the velocity keeping its length constant.
    A regular state is finished with the closed-form extinction tail.
    """
    if on_plateau not in ("raise", "hold"):
        raise ValueError("on_plateau must be 'raise' or 'hold'")
    s = np.array(s0, dtype=float)
    L = side_lengths_from_s(s)
    if L.min() <= 0:
        raise InvalidHexagon("initial side lengths must be positive")
    ag = ALPHA_HEX * gamma
    traj = PiecewiseLinearTrajectory(gamma=gamma)
    scale = float(np.abs(s).max())
    t = 0.0
    held = False
    traj.t.append(t)
    traj.s.append(s.copy())

    def levels_at(m_new, on_int, n, first):
        nonlocal held
        m_c, sliding = _consistent_levels(m_new, on_int, n, gamma)
        if sliding:
            i = sliding[0]
            if on_plateau == "raise":
                raise NonUniqueVelocity(i + 1, t, float(n[i]), _interval(n[i], gamma))
            traj.events.append(OdeEvent(t, "plateau", tuple(j + 1 for j in sliding), tuple(int(v) for v in m_c)))
            return m_c, _sliding_rates(m_c, sliding, n)
        alt = _held_levels(m_c, on_int, n, gamma)
        if alt is not None and t < release_time:
            m_alt, sides = alt
            if on_plateau == "raise":
                i = sides[0]
                raise NonUniqueVelocity(i + 1, t, float(n[i]), _interval(n[i], gamma))
            held = True
            traj.events.append(OdeEvent(t, "plateau", tuple(j + 1 for j in sides), tuple(int(v) for v in m_alt)))
            return m_alt, None
        return m_c, None

    m, on_int, n = _floor_levels(L, gamma)
    m, rates = levels_at(m, on_int, n, True)

    for _ in range(max_events):
        r = m.astype(float) if rates is None else rates
        traj.levels.append(tuple(float(v) for v in r))
        ds = _slopes_s(r, gamma)
        dL = _slopes_L(r, gamma)
        if not np.any(ds) and not held:
            traj.terminal = "Pinned"
            if t_max < math.inf:
                traj.t.append(t_max)
                traj.s.append(s.copy())
                traj.levels.append(traj.levels[-1])
            return traj
        if rates is None and not held and _is_regular(L, m):
            T = t + regular_extinction_time(float(L.mean()), gamma)
            return _finish_regular(traj, s, L, m, t, T, gamma, t_max, level_cap)
        # next crossing per side (sides held on a plateau have dL = 0)
        dt = np.full(6, math.inf)
        for i in range(6):
            if dL[i] < 0:
                dt[i] = (L[i] - ag / (m[i] + 1)) / -dL[i]
            elif dL[i] > 0 and m[i] >= 1:
                dt[i] = (ag / m[i] - L[i]) / dL[i]
        dt = np.maximum(dt, 0.0)
        t_rel = release_time - t if held else math.inf
        step = min(float(dt.min()), t_rel)
        if t + step >= t_max:
            s = s + ds * (t_max - t)
            t = t_max
            traj.t.append(t)
            traj.s.append(s.copy())
            traj.terminal = "MaxTime"
            return traj
        if not math.isfinite(step):
            traj.terminal = "Pinned"
            return traj
        s = s + ds * step
        t = t + step
        L = side_lengths_from_s(s)
        if L.min() <= 1e-14 * scale:
            traj.t.append(t)
            traj.s.append(s.copy())
            traj.terminal = "Extinction"
            traj.extinction_time = t
            traj.events.append(OdeEvent(t, "extinction", tuple(int(i) + 1 for i in np.flatnonzero(L <= 1e-14 * scale))))
            return traj
        crossing = np.flatnonzero(dt <= step * (1 + 1e-12) + 1e-15 * max(1.0, t))
        m_new, on_int, n = _floor_levels(L, gamma)
        # snap sides that just crossed onto their exact integer
        for i in crossing:
            on_int[i] = True
            n[i] = int(round(ag / L[i]))
            m_new[i] = n[i]
        if held and step == t_rel:
            held = False
            traj.events.append(OdeEvent(t, "release"))
        m, rates = levels_at(m_new, on_int, n, False)
        traj.t.append(t)
        traj.s.append(s.copy())
        traj.events.append(OdeEvent(t, "level", tuple(int(i) + 1 for i in crossing), tuple(int(v) for v in m)))
        if int(m.max()) > level_cap:
            # Close to extinction the levels are huge and the law is crystalline
            # up to O(1/level); the remaining time is below any practical resolution.
            T = t + float(np.mean(L)) ** 2 / (2.0 * ALPHA_HEX)
            traj.extinction_time = T
            traj.terminal = "Extinction"
            traj.events.append(OdeEvent(T, "extinction"))
            if T <= t_max and np.allclose(s[:3], s[3:]):
                traj.t.append(T)
                traj.s.append(np.zeros(6))
            return traj
    traj.terminal = "MaxEvents"
    return traj


def _interval(n, gamma):
    """Admissible normal velocities ``ds/dt`` on the integer level ``n``."""
    return (-SQRT3 / (2 * gamma) * n, -SQRT3 / (2 * gamma) * (n - 1))


def _is_regular(L, m) -> bool:
    return bool(np.all(m == m[0]) and np.ptp(L) <= 1e-12 * max(1.0, float(L.max())))


def _finish_regular(traj, s, L, m, t, T, gamma, t_max, level_cap):
    """Append the self-similar staircase down to extinction (or up to ``t_max``)."""
    ag = ALPHA_HEX * gamma
    c = s / L.mean()  # s is proportional to L for a regular hexagon about its centre
    Lc = float(L.mean())
    k = int(m[0])
    levels = min(level_cap, 2000)
    while k <= levels:
        target = ag / (k + 1)
        step = gamma * (Lc - target) / k
        if t + step >= t_max:
            Lc -= k * (t_max - t) / gamma
            traj.t.append(t_max)
            traj.s.append(c * Lc)
            traj.terminal = "MaxTime"
            traj.extinction_time = T
            return traj
        t += step
        Lc = target
        k += 1
        traj.t.append(t)
        traj.s.append(c * Lc)
        traj.levels.append(tuple([float(k)] * 6))
        traj.events.append(OdeEvent(t, "level", tuple(range(1, 7)), tuple([k] * 6)))
    if T <= t_max:
        traj.t.append(T)
        traj.s.append(c * 0.0)
        traj.events.append(OdeEvent(T, "extinction", tuple(range(1, 7))))
        traj.terminal = "Extinction"
    else:
        traj.t.append(t_max)
        traj.s.append(c * max(0.0, Lc - k * (t_max - t) / gamma))
        traj.terminal = "MaxTime"
    traj.extinction_time = T
    return traj


# --------------------------------------------------------------------------
# crystalline flow


@dataclass
class CrystallineSolution:
    t: np.ndarray
    s: np.ndarray
    extinction_time: float
    terminal: str
    _dense: object = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self._dense is not None:
            tt = np.clip(t, self.t[0], self.t[-1])
            return np.moveaxis(self._dense(tt), 0, -1)
        return np.stack([np.interp(t, self.t, self.s[:, i]) for i in range(6)], axis=-1)

    @property
    def L_array(self):
        return np.array([side_lengths_from_s(v) for v in self.s])


def crystalline_regular_L(L0: float, t):
    """``sqrt(L0^2 - 2 alpha t)``, zero after extinction."""
    t = np.asarray(t, dtype=float)
    return np.sqrt(np.maximum(L0 * L0 - 2.0 * ALPHA_HEX * t, 0.0))


def integrate_crystalline(L0, t_max: float = math.inf, rtol: float = 1e-10, n_out: int = 200,
                          stop_fraction: float = 1e-6, closed_form: bool = True) -> CrystallineSolution:
    """Crystalline flow with natural mobility from side lengths ``L0`` (array of 6, or a scalar).

    Regular data uses the closed form unless ``closed_form`` is false.  Otherwise the support distances of
    the origin-symmetric hexagon with these side lengths are integrated with
    an adaptive Runge-Kutta method; the run stops when the shortest side
    falls below ``stop_fraction`` times the initial longest one.
    """
    L0a = np.broadcast_to(np.asarray(L0, dtype=float), (6,)).copy()
    if L0a.min() <= 0:
        raise InvalidHexagon("initial side lengths must be positive")
    if closed_form and np.ptp(L0a) == 0:
        Lr = float(L0a[0])
        T = crystalline_extinction_time(Lr)
        t_end = min(T, t_max)
        t = np.linspace(0.0, t_end, n_out)
        Ls = crystalline_regular_L(Lr, t)
        s = np.outer(SQRT3 / 2.0 * Ls, np.ones(6))
        return CrystallineSolution(t, s, T, "Extinction" if T <= t_max else "MaxTime")
    from .hexgeom import symmetric_s_from_side_lengths

    if not np.allclose(L0a[:3], L0a[3:]):
        raise InvalidHexagon("crystalline integration needs origin-symmetric data")
    s0 = np.array(symmetric_s_from_side_lengths(L0a[:3]) * 2)
    floor_len = stop_fraction * float(L0a.max())

    def rhs(_t, s):
        L = side_lengths_from_s(s)
        return -CRYSTALLINE_FACTOR / np.maximum(L, floor_len)

    def vanish(_t, s):
        return side_lengths_from_s(s).min() - floor_len

    vanish.terminal = True
    vanish.direction = -1
    horizon = t_max if math.isfinite(t_max) else 10.0 * float(L0a.max()) ** 2
    sol = solve_ivp(rhs, (0.0, horizon), s0, method="DOP853", rtol=rtol, atol=rtol * float(s0.max()) * 1e-3,
                    events=vanish, dense_output=True)
    if sol.t_events[0].size:
        T = float(sol.t_events[0][0])
        terminal = "Extinction"
    else:
        T = math.inf
        terminal = "MaxTime"
    return CrystallineSolution(sol.t, sol.y.T, T, terminal, sol.sol)


def gamma_limit_check(L0: float, gamma_list) -> list[dict]:
    """Quantized versus crystalline extinction times of a regular hexagon of side ``L0``."""
    T_c = crystalline_extinction_time(L0)
    rows = []
    for g in gamma_list:
        if not L0 < ALPHA_HEX * g:
            raise ValueError(f"L0 must be below alpha*gamma for gamma = {g}")
        T_g = regular_extinction_time(L0, g)
        rel = (T_g - T_c) / T_c
        rows.append({
            "gamma": float(g),
            "T_quantized": T_g,
            "T_crystalline": T_c,
            "rel_error": rel,
            "bound": 3.0 * L0 / (ALPHA_HEX * g),
        })
    return rows


__all__ = [
    "integrate_quantized",
    "integrate_crystalline",
    "regular_extinction_time",
    "crystalline_extinction_time",
    "crystalline_regular_L",
    "gamma_limit_check",
    "PiecewiseLinearTrajectory",
    "CrystallineSolution",
    "OdeEvent",
]
