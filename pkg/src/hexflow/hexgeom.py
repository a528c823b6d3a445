"""Continuum convex Wulff-like hexagons described by their six support distances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidHexagon
from .lattice import NORMALS, SQRT3, phi_hex

# Relative tolerance used when classifying side lengths as zero.
LENGTH_TOL = 1e-12


def _roll(s, k):
    return np.roll(np.asarray(s, dtype=float), -k)


def side_lengths_from_s(s) -> np.ndarray:
    """``L_i = (2/sqrt3)(s_{i+1} + s_{i-1} - s_i)`` with indices mod 6 (no validity check)."""
    s = np.asarray(s, dtype=float)
    return (2.0 / SQRT3) * (_roll(s, 1) + _roll(s, -1) - s)


@dataclass(frozen=True)
class WulffHexagon:
    """The set ``{x : <x, n_i> <= s_i, i = 1..6}``.

    ``s`` holds the distances of the six sides from the origin, in the
    clockwise normal labelling of :mod:`hexflow.lattice`.  The hexagon may be
    degenerate (some side of length zero) but never has a redundant side.
    """

    s: tuple

    def __post_init__(self):
        s = tuple(float(v) for v in self.s)
        if len(s) != 6:
            raise InvalidHexagon(f"expected 6 side distances, got {len(s)}")
        if not all(math.isfinite(v) for v in s):
            raise InvalidHexagon(f"non-finite side distance in {s}")
        object.__setattr__(self, "s", s)
        L = side_lengths_from_s(s)
        scale = max(abs(v) for v in s) or 1.0
        if L.min() < -LENGTH_TOL * scale:
            i = int(np.argmin(L)) + 1
            raise InvalidHexagon(f"side {i} would have negative length {L[i - 1]:.6g}")
        if min(s[i] + s[i + 3] for i in range(3)) < 0:
            raise InvalidHexagon(f"empty hexagon for s = {s}")

    # constructors -----------------------------------------------------------
    @classmethod
    def regular(cls, apothem: float) -> "WulffHexagon":
        return cls((apothem,) * 6)

    @classmethod
    def regular_from_side(cls, L: float) -> "WulffHexagon":
        return cls.regular(SQRT3 / 2.0 * L)

    @classmethod
    def symmetric(cls, s1: float, s2: float, s3: float) -> "WulffHexagon":
        return cls((s1, s2, s3, s1, s2, s3))

    @classmethod
    def symmetric_from_sides(cls, L1: float, L2: float, L3: float) -> "WulffHexagon":
        """Origin-symmetric hexagon with ``L1 = L4``, ``L2 = L5``, ``L3 = L6``."""
        s = symmetric_s_from_side_lengths((L1, L2, L3))
        return cls.symmetric(*s)

    @classmethod
    def wulff_shape(cls) -> "WulffHexagon":
        """The unit ball of ``phi_hex_dual``; its support distances are ``phi_hex(n_i) = 2/sqrt3``."""
        return cls.regular(2.0 / SQRT3)

    # derived quantities -----------------------------------------------------
    @property
    def s_array(self) -> np.ndarray:
        return np.array(self.s)

    @property
    def L(self) -> np.ndarray:
        return np.maximum(side_lengths_from_s(self.s), 0.0)

    @property
    def is_degenerate(self) -> bool:
        scale = max(abs(v) for v in self.s) or 1.0
        return bool(side_lengths_from_s(self.s).min() <= LENGTH_TOL * scale)

    @property
    def is_origin_symmetric(self) -> bool:
        return all(self.s[i] == self.s[i + 3] for i in range(3))

    def vertices(self) -> np.ndarray:
        """Vertex ``V_i`` between sides ``S_i`` and ``S_{i+1}``, in clockwise order."""
        out = np.empty((6, 2))
        for i in range(6):
            j = (i + 1) % 6
            A = np.array([NORMALS[i], NORMALS[j]])
            out[i] = np.linalg.solve(A, [self.s[i], self.s[j]])
        return out

    def area(self) -> float:
        v = self.vertices()
        x, y = v[:, 0], v[:, 1]
        return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(NORMALS @ x <= self.s_array + tol))

    def scaled(self, lam: float) -> "WulffHexagon":
        return WulffHexagon(tuple(lam * v for v in self.s))


def symmetric_s_from_side_lengths(L) -> tuple[float, float, float]:
    """Invert the side-length map on origin-symmetric hexagons: ``s1 = (sqrt3/4)(L2 + L3)`` etc."""
    L1, L2, L3 = (float(v) for v in L)
    c = SQRT3 / 4.0
    return (c * (L2 + L3), c * (L1 + L3), c * (L1 + L2))


def side_lengths(h: WulffHexagon) -> np.ndarray:
    """Side lengths of a valid hexagon (raises :class:`InvalidHexagon` otherwise)."""
    L = side_lengths_from_s(h.s)
    scale = max(abs(v) for v in h.s) or 1.0
    if L.min() < -LENGTH_TOL * scale:
        raise InvalidHexagon(f"negative side length in {L}")
    return np.maximum(L, 0.0)


def anisotropic_perimeter(h: WulffHexagon) -> float:
    """``sum_i phi_hex(n_i) L_i``, which is ``(2/sqrt3) sum_i L_i`` for these hexagons."""
    return float(np.dot(phi_hex(NORMALS), side_lengths(h)))


@dataclass(frozen=True)
class IncenterSet:
    """Maximizers of the ``phi_hex_dual`` distance to the boundary.

    A single point has ``start == end``.
    """

    start: tuple
    end: tuple
    r: float

    @property
    def is_point(self) -> bool:
        return bool(np.allclose(self.start, self.end, atol=1e-9))

    def contains(self, x, tol: float = 1e-9) -> bool:
        p, q, x = np.asarray(self.start), np.asarray(self.end), np.asarray(x, dtype=float)
        d = q - p
        n2 = float(d @ d)
        if n2 == 0.0:
            return bool(np.linalg.norm(x - p) <= tol)
        lam = min(1.0, max(0.0, float((x - p) @ d) / n2))
        return bool(np.linalg.norm(x - (p + lam * d)) <= tol)


def boundary_distance(h: WulffHexagon, x) -> float:
    """``min_{y on boundary} phi_hex_dual(x - y)`` for ``x`` inside ``h``.

    The ``phi_hex_dual`` distance to the line ``<y, n_i> = s_i`` is
    ``(s_i - <x, n_i>) / phi_hex(n_i)``, so for convex ``h`` this is the
    smallest of the six line distances.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim > 1:
        gaps = h.s_array[:, None] - NORMALS @ x.T
        return (SQRT3 / 2.0) * gaps.min(axis=0)
    return float((SQRT3 / 2.0) * (h.s_array - NORMALS @ x).min())


def incenters(h: WulffHexagon) -> IncenterSet:
    """Incenter set and inradius through the linear program ``max r`` s.t. ``<x,n_i> + (2/sqrt3) r <= s_i``."""
    c_r = 2.0 / SQRT3
    A = np.column_stack([NORMALS, np.full(6, c_r)])
    b = h.s_array
    free = [(None, None), (None, None), (None, None)]
    res = linprog([0.0, 0.0, -1.0], A_ub=A, b_ub=b, bounds=free, method="highs")
    if not res.success:
        raise InvalidHexagon(f"inradius program failed: {res.message}")
    r = -res.fun
    # The incenter set is the (at most one-dimensional) inner parallel body;
    # probing along a direction oblique to every side picks out its endpoints.
    inner = b - c_r * r
    u = np.array([math.cos(0.3), math.sin(0.3)])
    ends = []
    for sign in (1.0, -1.0):
        res2 = linprog(-sign * u, A_ub=NORMALS, b_ub=inner + 1e-12 * max(1.0, abs(r)),
                       bounds=free[:2], method="highs")
        ends.append(tuple(res2.x))
    return IncenterSet(ends[1], ends[0], float(r))


def _point_segment_distance(p, a, b) -> float:
    d = b - a
    n2 = float(d @ d)
    lam = 0.0 if n2 == 0.0 else min(1.0, max(0.0, float((p - a) @ d) / n2))
    return float(np.linalg.norm(p - (a + lam * d)))


def _point_polygon_distance(p, h: WulffHexagon, verts) -> float:
    if h.contains(p, tol=1e-14):
        return 0.0
    return min(_point_segment_distance(p, verts[i], verts[(i + 1) % 6]) for i in range(6))


def hausdorff_distance(h1: WulffHexagon, h2: WulffHexagon) -> float:
    """Euclidean Hausdorff distance between two closed convex hexagons.

    For convex sets the one-sided excess is attained at a vertex, so the
    exact value only needs vertex-to-polygon distances.
    """
    v1, v2 = h1.vertices(), h2.vertices()
    d12 = max(_point_polygon_distance(p, h2, v2) for p in v1)
    d21 = max(_point_polygon_distance(p, h1, v1) for p in v2)
    return max(d12, d21)


def phi_dual_inradius_bruteforce(h: WulffHexagon, step: float = 1e-3):
    """Grid maximization of the boundary distance; returns ``(r, argmax points)``.

    Slow reference used by the tests to cross-check :func:`incenters`.
    """
    v = h.vertices()
    lo, hi = v.min(axis=0), v.max(axis=0)
    xs = np.arange(lo[0], hi[0] + step, step)
    ys = np.arange(lo[1], hi[1] + step, step)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    d = (SQRT3 / 2.0) * (h.s_array[None, :] - pts @ NORMALS.T).min(axis=1)
    r = d.max()
    return float(r), pts[d >= r - 2 * step]


__all__ = [
    "WulffHexagon",
    "IncenterSet",
    "side_lengths",
    "side_lengths_from_s",
    "symmetric_s_from_side_lengths",
    "anisotropic_perimeter",
    "incenters",
    "boundary_distance",
    "hausdorff_distance",
]
