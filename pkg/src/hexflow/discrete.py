"""Sets of hexagonal lattice cells: perimeter, discrete distance and step energy.

A cell ``H_eps(i)`` is the closed regular hexagon of side ``(sqrt3/3) eps``
centred at the lattice node ``i``; its vertices point along the normals
``n_1..n_6``.  Cell sets are stored as sets of :class:`LatticePoint`.

Discrete convex Wulff-like hexagons are described exactly by six integer
row offsets ``P_i``: a cell ``c`` belongs to the hexagon iff
``p_i(c) <= P_i`` for every ``i`` (``p_i`` as in
:data:`hexflow.lattice.NORMAL_PROJECTION`).  The canonical offsets are the
maxima of ``p_i`` over the cells, and the Wulff-like envelope then has
``s_i = (sqrt3/2) eps P_i + (sqrt3/3) eps``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import EmptyDiscretization, InvalidHexagon, UndefinedDistance
from .hexgeom import WulffHexagon
from .lattice import (
    NEIGHBOR_OFFSETS,
    NORMAL_PROJECTION,
    SQRT3,
    LatticePoint,
    hex_units,
    neighbors,
)

CELL_AREA_FACTOR = SQRT3 / 2.0  # area of H_eps(i) is (sqrt3/2) eps^2
CELL_SIDE_FACTOR = SQRT3 / 3.0  # cell side length is (sqrt3/3) eps
ROW_SPACING = SQRT3 / 2.0  # distance between consecutive rows, in units of eps

# Rounding slack for the containment test of floating-point hexagons.
CONTAINMENT_TOL = 1e-9


@dataclass(frozen=True)
class CellSet:
    """A finite set of lattice cells at spacing ``eps``."""

    eps: float
    cells: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        object.__setattr__(
            self, "cells", frozenset(LatticePoint(int(a), int(b)) for a, b in self.cells)
        )

    def __len__(self):
        return len(self.cells)

    def __contains__(self, p):
        return tuple(p) in self.cells

    def __iter__(self):
        return iter(sorted(self.cells))

    def translated(self, da: int, db: int) -> "CellSet":
        return CellSet(self.eps, frozenset((a + da, b + db) for a, b in self.cells))

    def to_json(self) -> str:
        return cells_to_json(self.eps, self.cells)

    @classmethod
    def from_json(cls, text: str) -> "CellSet":
        data = json.loads(text)
        return cls(float(data["eps"]), frozenset(tuple(c) for c in data["cells"]))


def cells_to_json(eps: float, cells: Iterable) -> str:
    """Canonical serialization, cells sorted lexicographically."""
    payload = {"eps": eps, "cells": [[int(a), int(b)] for a, b in sorted(cells)]}
    return json.dumps(payload, separators=(",", ":"))


def cell_vertices(p, eps: float) -> np.ndarray:
    """The six vertices of ``H_eps(p)``."""
    from .lattice import NORMALS

    c = LatticePoint(*p).cartesian(eps)
    return c + CELL_SIDE_FACTOR * eps * NORMALS


def cell_of_point(x, eps: float) -> LatticePoint:
    """The cell containing ``x``; on cell boundaries the lowest axial pair wins.

    This is the point-evaluation convention for the discrete distance, which
    is otherwise only defined up to the (null) union of cell boundaries.
    """
    p0 = LatticePoint.from_cartesian(x, eps)
    x = np.asarray(x, dtype=float)
    best, best_d = None, math.inf
    cands = [p0] + [LatticePoint(p0.a + da, p0.b + db)
                    for da in range(-2, 3) for db in range(-2, 3) if (da, db) != (0, 0)]
    for q in sorted(cands):
        d = float(np.linalg.norm(q.cartesian(eps) - x))
        if d < best_d - 1e-12 * eps:
            best, best_d = q, d
    return best


# --------------------------------------------------------------------------
# perimeter


def boundary_edge_count(cells) -> int:
    """Number of cell sides separating a cell of the set from one outside it."""
    cells = cells if isinstance(cells, (set, frozenset)) else set(cells)
    count = 0
    for a, b in cells:
        for da, db in NEIGHBOR_OFFSETS:
            if (a + da, b + db) not in cells:
                count += 1
    return count


def perimeter_energy(E) -> float:
    """Ferromagnetic perimeter ``(sqrt3/3)(eps/2) #{ordered straddling pairs}``.

    Each straddling nearest-neighbour couple is counted in both orders, so the
    value is the Euclidean length of the boundary of the union of cells.
    """
    if isinstance(E, DiscreteHexagon):
        return E.perimeter
    ordered_pairs = 2 * boundary_edge_count(E.cells)
    return CELL_SIDE_FACTOR * 0.5 * E.eps * ordered_pairs


# --------------------------------------------------------------------------
# discrete distance


def inner_shell(cells) -> set:
    """Cells of the set having at least one neighbour outside it."""
    cells = cells if isinstance(cells, (set, frozenset)) else set(cells)
    return {p for p in cells if any(q not in cells for q in neighbors(p))}


def outer_shell(cells) -> set:
    """Cells outside the set having at least one neighbour inside it."""
    cells = cells if isinstance(cells, (set, frozenset)) else set(cells)
    out = set()
    for p in cells:
        for q in neighbors(p):
            if q not in cells:
                out.add(q)
    return out


def discrete_distance_units(i, F: CellSet, _shells=None) -> int:
    """Integer ``k`` with ``d^eps(i, F) = (3/4) eps k``.

    Outside ``F`` this is the hexagonal distance to the nearest cell of ``F``;
    inside it is the distance to the nearest cell of the complement.  Only
    boundary shells are scanned: a shortest lattice path to the target set
    first enters it through such a shell.
    """
    if len(F.cells) == 0:
        raise UndefinedDistance("distance to an empty cell set")
    a, b = i
    if _shells is None:
        _shells = (inner_shell(F.cells), outer_shell(F.cells))
    targets = _shells[1] if (a, b) in F.cells else _shells[0]
    return min(hex_units(a - c, b - d) for c, d in targets)


def discrete_distance(i, F: CellSet) -> float:
    return 0.75 * F.eps * discrete_distance_units(i, F)


def discrete_distance_at(x, F: CellSet) -> float:
    """Point evaluation of ``d^eps(x, boundary of F)``, see :func:`cell_of_point`."""
    return discrete_distance(cell_of_point(x, F.eps), F)


def discrete_distance_bruteforce(i, F: CellSet, window: int | None = None) -> int:
    """Reference ``min`` over all of ``F`` (or all of a window of its complement)."""
    a, b = i
    if (a, b) in F.cells:
        aa = [c[0] for c in F.cells]
        bb = [c[1] for c in F.cells]
        w = window if window is not None else 1
        best = math.inf
        for c in range(min(aa) - w, max(aa) + w + 1):
            for d in range(min(bb) - w, max(bb) + w + 1):
                if (c, d) not in F.cells:
                    best = min(best, hex_units(a - c, b - d))
        return int(best)
    return min(hex_units(a - c, b - d) for c, d in F.cells)


# --------------------------------------------------------------------------
# grids


@dataclass
class CellGrid:
    """Boolean occupancy array over axial coordinates, with a margin of empty cells."""

    mask: np.ndarray
    a0: int
    b0: int

    @classmethod
    def from_cells(cls, cells, margin: int = 1, extra: Iterable = ()) -> "CellGrid":
        pts = list(cells) + list(extra)
        if not pts:
            return cls(np.zeros((1, 1), dtype=bool), 0, 0)
        aa = np.array([p[0] for p in pts])
        bb = np.array([p[1] for p in pts])
        a0, b0 = aa.min() - margin, bb.min() - margin
        shape = (aa.max() - a0 + margin + 1, bb.max() - b0 + margin + 1)
        mask = np.zeros(shape, dtype=bool)
        ca = np.array([p[0] for p in cells], dtype=int)
        cb = np.array([p[1] for p in cells], dtype=int)
        if len(ca):
            mask[ca - a0, cb - b0] = True
        return cls(mask, int(a0), int(b0))

    def index(self, p):
        return p[0] - self.a0, p[1] - self.b0


def _shift(mask: np.ndarray, da: int, db: int, fill: bool) -> np.ndarray:
    """``out[a, b] = mask[a + da, b + db]`` with ``fill`` outside the array."""
    out = np.full_like(mask, fill)
    na, nb = mask.shape
    sa = slice(max(0, -da), min(na, na - da))
    sb = slice(max(0, -db), min(nb, nb - db))
    ta = slice(max(0, da), min(na, na + da))
    tb = slice(max(0, db), min(nb, nb + db))
    out[sa, sb] = mask[ta, tb]
    return out


def mask_boundary_edges(mask: np.ndarray) -> int:
    """Boundary edge count of a grid mask whose border rows are empty."""
    total = 0
    for da, db in NEIGHBOR_OFFSETS[:3]:
        total += int(np.count_nonzero(mask ^ _shift(mask, da, db, False)))
    return total


def depth_field(mask: np.ndarray) -> np.ndarray:
    """Hexagonal distance from each cell of ``mask`` to the nearest cell outside it.

    Zero outside the mask.  Computed by repeated erosion: a cell is at depth
    ``>= k + 1`` iff all six neighbours are at depth ``>= k``.
    """
    depth = np.zeros(mask.shape, dtype=np.int64)
    level = mask.copy()
    while level.any():
        depth += level
        nxt = level.copy()
        for da, db in NEIGHBOR_OFFSETS:
            nxt &= _shift(level, da, db, False)
        level = nxt
    return depth


def reach_field(mask: np.ndarray, limit: int | None = None) -> np.ndarray:
    """Hexagonal distance from each cell outside ``mask`` to the nearest cell of ``mask``.

    Zero on the mask; cells farther than ``limit`` (if given) are left at 0.
    """
    reach = np.zeros(mask.shape, dtype=np.int64)
    cover = mask.copy()
    k = 0
    while not cover.all():
        k += 1
        if limit is not None and k > limit:
            break
        grown = cover.copy()
        for da, db in NEIGHBOR_OFFSETS:
            grown |= _shift(cover, da, db, False)
        if not (grown & ~cover).any():
            break
        reach[grown & ~cover] = k
        cover = grown
    return reach


# --------------------------------------------------------------------------
# step energy


def dissipation_units(E: CellSet, F: CellSet) -> int:
    """``sum_{E \\ F} k(c, F) + sum_{F \\ E} k(c, complement of F)`` in units of ``(3/4) eps``."""
    if len(F.cells) == 0:
        raise UndefinedDistance("step energy relative to an empty set")
    added = E.cells - F.cells
    removed = F.cells - E.cells
    if not added and not removed:
        return 0
    grid = CellGrid.from_cells(F.cells, margin=2, extra=added)
    total = 0
    if removed:
        depth = depth_field(grid.mask)
        ia = np.array([p[0] for p in removed]) - grid.a0
        ib = np.array([p[1] for p in removed]) - grid.b0
        total += int(depth[ia, ib].sum())
    if added:
        reach = reach_field(grid.mask)
        ia = np.array([p[0] for p in added]) - grid.a0
        ib = np.array([p[1] for p in added]) - grid.b0
        total += int(reach[ia, ib].sum())
    return total


def step_energy(E, F, tau: float, eps: float | None = None) -> float:
    """``P_eps(E) + (sqrt3/2)(eps^2/tau) [sum_{E\\F} d(., F) + sum_{F\\E} d(., F^c)]``."""
    E = E.as_cellset() if isinstance(E, DiscreteHexagon) else E
    F = F.as_cellset() if isinstance(F, DiscreteHexagon) else F
    eps = F.eps if eps is None else eps
    if not tau > 0:
        raise ValueError("tau must be positive")
    units = dissipation_units(E, F)
    return perimeter_energy(E) + CELL_AREA_FACTOR * eps**2 / tau * 0.75 * eps * units


# --------------------------------------------------------------------------
# discrete convex Wulff-like hexagons


def _canonical_offsets(P) -> tuple:
    P = [int(v) for v in P]
    # Feasibility of {p_i <= P_i}: opposite pairs and the two alternating triples.
    if min(P[i] + P[i + 3] for i in range(3)) < 0 or P[0] + P[2] + P[4] < 0 or P[1] + P[3] + P[5] < 0:
        raise EmptyDiscretization(f"no lattice cell satisfies the offsets {tuple(P)}")
    # Support of the integer polygon: only {n_i} and {n_{i-1}, n_{i+1}} are positive bases of n_i.
    return tuple(min(P[i], P[i - 1] + P[(i + 1) % 6]) for i in range(6))


class DiscreteHexagon:
    """Union of the cells inside a convex Wulff-like hexagon, in canonical offsets."""

    __slots__ = ("eps", "P", "__dict__")

    def __init__(self, eps: float, P):
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.eps = float(eps)
        self.P = _canonical_offsets(P)

    def __repr__(self):
        return f"DiscreteHexagon(eps={self.eps!r}, P={self.P})"

    def __eq__(self, other):
        return isinstance(other, DiscreteHexagon) and self.eps == other.eps and self.P == other.P

    def __hash__(self):
        return hash((self.eps, self.P))

    # geometry ---------------------------------------------------------------
    @property
    def M(self) -> tuple:
        """Integer side parameters ``P_{i-1} + P_{i+1} - P_i``; the row along side ``i`` has ``M_i + 1`` cells."""
        P = self.P
        return tuple(P[i - 1] + P[(i + 1) % 6] - P[i] for i in range(6))

    @property
    def s(self) -> np.ndarray:
        return self.eps * (ROW_SPACING * np.array(self.P, dtype=float) + CELL_SIDE_FACTOR)

    @property
    def L(self) -> np.ndarray:
        return self.eps * (np.array(self.M, dtype=float) + 2.0 / 3.0)

    @cached_property
    def envelope(self) -> WulffHexagon:
        """Smallest convex Wulff-like hexagon containing the cells."""
        return WulffHexagon(tuple(self.s))

    @property
    def is_origin_symmetric(self) -> bool:
        return all(self.P[i] == self.P[i + 3] for i in range(3))

    def contains(self, p) -> bool:
        a, b = p
        for (ca, cb), Pi in zip(NORMAL_PROJECTION, self.P):
            if ca * a + cb * b > Pi:
                return False
        return True

    __contains__ = contains

    def rows_of(self, p) -> tuple:
        """Row index ``r_i = P_i - p_i(p)`` of a cell with respect to each side (0 is outermost)."""
        a, b = p
        return tuple(Pi - (ca * a + cb * b) for (ca, cb), Pi in zip(NORMAL_PROJECTION, self.P))

    def depth(self, p) -> int:
        """Hexagonal distance from a cell of the set to its complement."""
        return min(self.rows_of(p)) + 1

    @property
    def b_range(self) -> tuple:
        return -self.P[3], self.P[0]

    def a_range(self, b: int) -> tuple:
        P = self.P
        return max(-P[5], -P[4] - b), min(P[2], P[1] - b)

    def __len__(self):
        return self.n_cells

    @cached_property
    def n_cells(self) -> int:
        lo, hi = self.b_range
        return sum(max(0, self.a_range(b)[1] - self.a_range(b)[0] + 1) for b in range(lo, hi + 1))

    def iter_cells(self):
        lo, hi = self.b_range
        for b in range(lo, hi + 1):
            a_lo, a_hi = self.a_range(b)
            for a in range(a_lo, a_hi + 1):
                yield LatticePoint(a, b)

    @cached_property
    def cells(self) -> frozenset:
        return frozenset(self.iter_cells())

    def as_cellset(self) -> CellSet:
        return CellSet(self.eps, self.cells)

    def grid(self, margin: int = 1) -> CellGrid:
        lo, hi = self.b_range
        P = self.P
        a0, a1 = -P[5] - margin, P[2] + margin
        b0, b1 = lo - margin, hi + margin
        A, B = np.meshgrid(np.arange(a0, a1 + 1), np.arange(b0, b1 + 1), indexing="ij")
        mask = np.ones(A.shape, dtype=bool)
        for (ca, cb), Pi in zip(NORMAL_PROJECTION, P):
            mask &= ca * A + cb * B <= Pi
        return CellGrid(mask, int(a0), int(b0))

    def row_cells(self, i: int, r: int) -> np.ndarray:
        """Cells of the set in row ``r`` (0-based from outside) parallel to side ``i`` (1-based)."""
        P = self.P
        v = P[i - 1] - r
        k = (i - 1) % 3
        sign = 1 if i <= 3 else -1
        w = sign * v  # value of b, a + b or a for i mod 3 = 1, 2, 0
        if k == 0:  # b = w
            a_lo, a_hi = self.a_range(w)
            a = np.arange(a_lo, a_hi + 1)
            b = np.full_like(a, w)
        elif k == 2:  # a = w
            b_lo = max(-P[3], -P[4] - w)
            b_hi = min(P[0], P[1] - w)
            b = np.arange(b_lo, b_hi + 1)
            a = np.full_like(b, w)
        else:  # a + b = w
            a_lo = max(-P[5], w - P[0])
            a_hi = min(P[2], w + P[3])
            a = np.arange(a_lo, a_hi + 1)
            b = w - a
        if a.size and not (-P[3] <= b.min() and b.max() <= P[0]):
            keep = (b >= -P[3]) & (b <= P[0])
            a, b = a[keep], b[keep]
        return np.column_stack([a, b]) if a.size else np.zeros((0, 2), dtype=int)

    # energies ---------------------------------------------------------------
    @property
    def boundary_edges(self) -> int:
        return 2 * sum(self.M) + 6

    @property
    def perimeter(self) -> float:
        return CELL_SIDE_FACTOR * self.eps * self.boundary_edges

    def shifted(self, N) -> "DiscreteHexagon":
        """Hexagon with ``N_i`` outer rows removed from each side (offsets only)."""
        return DiscreteHexagon(self.eps, [Pi - int(n) for Pi, n in zip(self.P, N)])

    def removal_depth_units(self, N) -> int:
        """``sum`` of depths over the cells removed when stripping ``N_i`` rows from side ``i``.

        Only the removed band is enumerated, so the cost is proportional to
        the perimeter times ``max N``.
        """
        seen = {}
        for i in range(1, 7):
            for r in range(int(N[i - 1])):
                for a, b in self.row_cells(i, r):
                    seen[(int(a), int(b))] = None
        return sum(self.depth(p) for p in seen)

    def to_json(self) -> str:
        return cells_to_json(self.eps, self.cells)

    @classmethod
    def from_cells(cls, E: CellSet) -> "DiscreteHexagon":
        """Recognize a discrete convex Wulff-like hexagon; raises if the cells are not one."""
        if not E.cells:
            raise EmptyDiscretization("empty cell set")
        P = [max(ca * a + cb * b for a, b in E.cells) for ca, cb in NORMAL_PROJECTION]
        h = cls(E.eps, P)
        if h.n_cells != len(E.cells):
            raise InvalidHexagon("cell set is not a discrete convex Wulff-like hexagon")
        return h


def discretize(K: WulffHexagon, eps: float) -> DiscreteHexagon:
    """All cells ``H_eps(i)`` contained in the closed hexagon ``K``.

    A cell lies in the half-plane ``<x, n_i> <= s_i`` iff its vertex in the
    direction ``n_i`` does, i.e. ``(sqrt3/2) eps p_i + (sqrt3/3) eps <= s_i``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    P = []
    for si in K.s:
        q = si / (ROW_SPACING * eps) - CELL_SIDE_FACTOR / ROW_SPACING
        P.append(math.floor(q + CONTAINMENT_TOL * max(1.0, abs(q))))
    return DiscreteHexagon(eps, P)


__all__ = [
    "CellSet",
    "CellGrid",
    "DiscreteHexagon",
    "discretize",
    "perimeter_energy",
    "discrete_distance",
    "discrete_distance_units",
    "discrete_distance_at",
    "step_energy",
    "dissipation_units",
    "depth_field",
    "reach_field",
    "mask_boundary_edges",
    "cell_of_point",
    "cell_vertices",
]
