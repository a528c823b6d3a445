"""One minimizing-movement step on a discrete convex Wulff-like hexagon.

Removing ``N_i`` outer rows from side ``i`` changes the perimeter by
``-(2 sqrt3/3) eps sum N_i`` exactly.  If every removed row had ``L_i/eps``
cells the dissipation would be ``sqrt3 eps (3/(8 gamma)) L_i N_i(N_i+1)/2``,
which gives the separable quadratic of :func:`reduced_energy`.  Its
per-side minimizer is ``floor(alpha * gamma / L_i)`` with ``alpha = 16/9``.
The true energy also sees the corner cells; :func:`brute_force_step`
evaluates it exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .discrete import (
    CELL_AREA_FACTOR,
    CELL_SIDE_FACTOR,
    CellGrid,
    CellSet,
    DiscreteHexagon,
    depth_field,
    reach_field,
)
from .errors import EmptyDiscretization, SearchTruncated, SideVanished
from .lattice import NEIGHBOR_OFFSETS, NORMAL_PROJECTION, SQRT3, LatticePoint

ALPHA_HEX = 16.0 / 9.0
ALPHA_HEX_EXACT = Fraction(16, 9)

# Default half-width of the tie window, in units of eps, on alpha*gamma/L.
DEFAULT_TIE_WINDOW = 1.0

TIE_POLICIES = ("lower", "upper", "alternate")


def pinning_threshold(gamma: float) -> float:
    """Side length above which removing one row costs more than it saves."""
    return ALPHA_HEX * gamma


def reduced_energy(N, L, gamma: float, eps: float) -> float:
    """``sqrt3 eps sum_i (-(2/3) N_i + (3/(8 gamma)) L_i N_i (N_i + 1)/2)``."""
    N = np.asarray(N, dtype=float)
    L = np.broadcast_to(np.asarray(L, dtype=float), N.shape)
    terms = -(2.0 / 3.0) * N + 3.0 / (8.0 * gamma) * L * N * (N + 1.0) / 2.0
    return float(SQRT3 * eps * terms.sum())


def side_energy(n: int, L: float, gamma: float, eps: float) -> float:
    """Single-side term of :func:`reduced_energy`."""
    return SQRT3 * eps * (-(2.0 / 3.0) * n + 3.0 / (8.0 * gamma) * L * n * (n + 1) / 2.0)


@dataclass(frozen=True)
class StepPlan:
    """Rows removed per side in one step, with tie flags."""

    N: tuple
    tie: tuple
    gamma: float
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "N", tuple(int(n) for n in self.N))
        object.__setattr__(self, "tie", tuple(bool(t) for t in self.tie))
        if len(self.N) != 6 or len(self.tie) != 6:
            raise ValueError("a plan has six entries")
        if min(self.N) < 0:
            raise ValueError("layer counts are nonnegative")

    @property
    def is_zero(self) -> bool:
        return not any(self.N)

    @property
    def tie_mask(self) -> int:
        """Bit ``i - 1`` set when side ``i`` is in the tie window."""
        return sum(1 << i for i, t in enumerate(self.tie) if t)

    @classmethod
    def zero(cls, gamma: float, eps: float) -> "StepPlan":
        return cls((0,) * 6, (False,) * 6, gamma, eps)


def _tie_candidates(x: float, window: float):
    """``(n - 1, n)`` if ``x`` lies within ``window`` of a positive integer ``n``."""
    n = math.floor(x + 0.5)
    if n >= 1 and abs(x - n) < window:
        return n - 1, n
    return None


def optimal_layers(L, gamma: float, eps: float, tie_window: float = DEFAULT_TIE_WINDOW,
                   tie_policy: str = "lower", step: int = 0) -> StepPlan:
    """Per-side minimizer of the reduced quadratic.

    The marginal gain of the ``n``-th row is ``(2/3)(n/x - 1)`` with
    ``x = alpha gamma / L_i``, so the minimizer over ``n >= 0`` is
    ``floor(x)``, and both ``x - 1`` and ``x`` are optimal when ``x`` is an
    integer.  Sides with ``|x - n| < tie_window * eps`` for a positive
    integer ``n`` are flagged; the two competing values are then ``n - 1``
    and ``n`` and ``tie_policy`` picks one (``alternate`` uses the parity
    of ``step``).
    """
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy {tie_policy!r}")
    L = [float(v) for v in L]
    if len(L) != 6 or min(L) <= 0:
        raise ValueError("six positive side lengths are required")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    N, tie = [], []
    for Li in L:
        x = ALPHA_HEX * gamma / Li
        cand = _tie_candidates(x, tie_window * eps)
        if cand is None:
            N.append(math.floor(x))
            tie.append(False)
            continue
        lo, hi = cand
        if tie_policy == "lower" or (tie_policy == "alternate" and step % 2 == 0):
            N.append(lo)
        else:
            N.append(hi)
        tie.append(True)
    return StepPlan(tuple(N), tuple(tie), gamma, eps)


def minimizers_bruteforce(L: float, gamma: float, eps: float, n_max: int = 50, rtol: float = 1e-12):
    """All ``n`` in ``0..n_max`` minimizing the single-side reduced energy (test oracle)."""
    vals = [side_energy(n, L, gamma, eps) for n in range(n_max + 1)]
    best = min(vals)
    scale = max(abs(best), SQRT3 * eps)
    return [n for n, v in enumerate(vals) if v <= best + rtol * scale]


def apply_plan(E: DiscreteHexagon, plan: StepPlan) -> DiscreteHexagon:
    """Shift every side inwards by ``N_i`` rows.

    The envelope moves by ``s_i -> s_i - (sqrt3/2) eps N_i`` and the side
    lengths by ``(N_i - N_{i-1} - N_{i+1}) eps``.  Raises
    :class:`SideVanished` if some side would lose all its cells.
    """
    if plan.is_zero:
        return E
    P = [p - n for p, n in zip(E.P, plan.N)]
    for i in range(6):
        M = P[i - 1] + P[(i + 1) % 6] - P[i]
        if M < 0:
            raise SideVanished(i + 1, E.eps * (M + 2.0 / 3.0))
    try:
        return DiscreteHexagon(E.eps, P)
    except EmptyDiscretization:
        raise SideVanished(int(np.argmin(plan.N)) + 1, 0.0) from None


# --------------------------------------------------------------------------
# brute force over envelope shifts


@dataclass(frozen=True)
class BruteForceResult:
    hexagon: object  # DiscreteHexagon, or None when every cell is removed
    plan: StepPlan
    energy: float
    edges: int
    dissipation_units: int

    def __iter__(self):
        return iter((self.hexagon, self.plan, self.energy))


class _Band:
    """Cells of ``E`` within ``depth`` rows of its boundary, with neighbour indices."""

    def __init__(self, E: DiscreteHexagon, depth: int):
        grid = E.grid(margin=1)
        na, nb = grid.mask.shape
        A, B = np.meshgrid(np.arange(na) + grid.a0, np.arange(nb) + grid.b0, indexing="ij")
        R = np.stack([Pi - (ca * A + cb * B) for (ca, cb), Pi in zip(NORMAL_PROJECTION, E.P)], axis=-1)
        in_band = grid.mask & (R.min(axis=-1) <= depth)
        ia, ib = np.nonzero(in_band)  # row-major order: a first, then b
        n = ia.size
        self.cells = [LatticePoint(int(a), int(b)) for a, b in zip(ia + grid.a0, ib + grid.b0)]
        self.rows = R[ia, ib].astype(np.int64).reshape(-1, 6)
        self.depth = self.rows.min(axis=1) + 1
        # -1: outside E (never kept); n: deep interior (always kept).
        index = np.where(grid.mask, n, -1).astype(np.int64)
        index[ia, ib] = np.arange(n)
        nbr = np.empty((n, 6), dtype=np.int64)
        for j, (da, db) in enumerate(NEIGHBOR_OFFSETS):
            nbr[:, j] = index[ia + da, ib + db]  # the margin keeps neighbours in range
        self.nbr = nbr
        self.n_inside_rest = E.n_cells - n


def _candidate_plans(symmetric: bool, max_layers: int) -> np.ndarray:
    rng = range(max_layers + 1)
    if symmetric:
        half = np.array(list(itertools.product(rng, repeat=3)), dtype=np.int64)
        return np.hstack([half, half])
    return np.array(list(itertools.product(rng, repeat=6)), dtype=np.int64)


def _evaluate(band: _Band, plans: np.ndarray, chunk: int = 64):
    """Boundary edge counts and dissipation units for each candidate plan."""
    n = len(band.cells)
    edges = np.empty(len(plans), dtype=np.int64)
    diss = np.empty(len(plans), dtype=np.int64)
    for start in range(0, len(plans), chunk):
        Nc = plans[start:start + chunk]
        removed = (band.rows[None, :, :] < Nc[:, None, :]).any(axis=2)
        kept = ~removed
        diss[start:start + chunk] = (removed * band.depth[None, :]).sum(axis=1)
        # pad: index -1 -> False (outside), index n -> True (interior)
        padded = np.concatenate(
            [kept, np.ones((len(Nc), 1), dtype=bool), np.zeros((len(Nc), 1), dtype=bool)], axis=1
        )
        idx = np.where(band.nbr < 0, n + 1, band.nbr)
        nb_kept = padded[:, idx]  # (chunk, n, 6)
        e_band = (kept[:, :, None] & ~nb_kept).sum(axis=(1, 2))
        # interior cells never touch the complement of the candidate except
        # through band cells, which are counted from the band side.
        e_in = ((~kept)[:, :, None] & nb_kept & (idx == n)[None, :, :]).sum(axis=(1, 2))
        edges[start:start + chunk] = e_band + e_in
    return edges, diss


def _exact_energy_key(edges: int, diss: int, eps: Fraction, gamma: Fraction) -> Fraction:
    # energy / (sqrt3 eps) = edges/3 + (3 eps / (8 gamma)) diss
    return Fraction(edges, 3) + Fraction(3) * eps / (8 * gamma) * diss


def brute_force_step(E: DiscreteHexagon, gamma: float, max_layers: int = 6,
                     symmetric: bool | None = None) -> BruteForceResult:
    """Exact minimizer of the step energy over all envelope shifts ``0..max_layers``.

    For origin-symmetric ``E`` (unless ``symmetric=False``) only symmetric
    shifts are scanned, ``(max_layers + 1)**3`` candidates; otherwise all
    ``(max_layers + 1)**6``.  Perimeters and dissipations are integer counts
    over the boundary band, so energies are compared exactly in rational
    arithmetic; equal energies go to the lexicographically smallest plan.
    The empty set is compared as well; when it wins, ``hexagon`` is None and
    the plan strips every row.
    """
    if max_layers < 0:
        raise ValueError("max_layers must be nonnegative")
    eps = E.eps
    if symmetric is None:
        symmetric = E.is_origin_symmetric
    band = _Band(E, max_layers)
    plans = _candidate_plans(symmetric, max_layers)
    edges, diss = _evaluate(band, plans)
    approx = edges / 3.0 + 3.0 * eps / (8.0 * gamma) * diss
    lo = approx.min()
    near = np.flatnonzero(approx <= lo + 1e-9 * max(1.0, abs(lo)))
    feps, fgam = Fraction(eps), Fraction(gamma)
    keyed = sorted(
        ((_exact_energy_key(int(edges[k]), int(diss[k]), feps, fgam), tuple(int(v) for v in plans[k]), k)
         for k in near)
    )
    best_key, best_plan, k = keyed[0]
    # energies are not unimodal in N for small sets, so the empty set is always a candidate
    grid = E.grid(margin=1)
    empty_units = int(depth_field(grid.mask)[grid.mask].sum())
    empty_key = _exact_energy_key(0, empty_units, feps, fgam)
    if empty_key < best_key:
        P = E.P
        N = tuple(P[i] + P[(i + 3) % 6] + 1 for i in range(6))
        plan = StepPlan(N, (False,) * 6, gamma, eps)
        return BruteForceResult(None, plan, SQRT3 * eps * float(empty_key), 0, empty_units)
    if max_layers > 0 and max_layers in best_plan:
        raise SearchTruncated(f"minimizer {best_plan} reaches max_layers = {max_layers}")
    energy = SQRT3 * eps * float(best_key)
    P = [p - n for p, n in zip(E.P, best_plan)]
    try:
        hexagon = DiscreteHexagon(eps, P)
    except EmptyDiscretization:
        hexagon = None
    plan = StepPlan(best_plan, (False,) * 6, gamma, eps)
    return BruteForceResult(hexagon, plan, energy, int(edges[k]), int(diss[k]))


def plan_energy(E: DiscreteHexagon, N, gamma: float) -> float:
    """Exact step energy of the set obtained by stripping ``N_i`` rows from side ``i``."""
    band = _Band(E, max(int(n) for n in N))
    edges, diss = _evaluate(band, np.array([list(N)], dtype=np.int64))
    return SQRT3 * E.eps * float(edges[0] / 3.0 + 3.0 * E.eps / (8.0 * gamma) * diss[0])


# --------------------------------------------------------------------------
# minimizer over arbitrary cell sets


def full_minimizer(F: CellSet, gamma: float, margin: int = 2):
    """Global minimizer of the step energy over all cell sets in a window around ``F``.

    The energy is a sum of unary terms (dissipation) and of a pairwise term
    ``(sqrt3/3) eps [x_c != x_q]`` on lattice edges, so it is minimized
    exactly by a minimum s-t cut.  Cells outside the window are fixed empty.
    Returns ``(cells, energy)``.
    """
    import networkx as nx

    eps = F.eps
    tau = gamma * eps
    grid = CellGrid.from_cells(F.cells, margin=margin + 1)
    mask = grid.mask
    depth = depth_field(mask)
    reach = reach_field(mask)
    unit = CELL_AREA_FACTOR * eps**2 / tau * 0.75 * eps
    w_edge = CELL_SIDE_FACTOR * eps
    na, nb = mask.shape
    G = nx.DiGraph()
    src, snk = "s", "t"
    big = 1e9

    def node(ia, ib):
        return (ia, ib)

    for ia in range(na):
        for ib in range(nb):
            v = node(ia, ib)
            border = ia in (0, na - 1) or ib in (0, nb - 1)
            if mask[ia, ib]:
                # excluding a cell of F costs its depth
                G.add_edge(src, v, capacity=unit * depth[ia, ib])
            else:
                # including a cell outside F costs its distance to F
                G.add_edge(v, snk, capacity=big if border else unit * reach[ia, ib])
            for da, db in NEIGHBOR_OFFSETS[:3]:
                ja, jb = ia + da, ib + db
                if 0 <= ja < na and 0 <= jb < nb:
                    G.add_edge(v, node(ja, jb), capacity=w_edge)
                    G.add_edge(node(ja, jb), v, capacity=w_edge)
    cut, (reachable, _) = nx.minimum_cut(G, src, snk)
    cells = frozenset((ia + grid.a0, ib + grid.b0) for (ia, ib) in (reachable - {src}))
    return cells, float(cut)


__all__ = [
    "ALPHA_HEX",
    "StepPlan",
    "reduced_energy",
    "optimal_layers",
    "apply_plan",
    "brute_force_step",
    "full_minimizer",
    "plan_energy",
]
