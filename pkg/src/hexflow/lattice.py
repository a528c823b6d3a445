"""Triangular lattice geometry and the hexagonal norm pair.

Points of the lattice are ``a*eta1 + b*eta2`` with ``eta1 = (1, 0)`` and
``eta2 = (1/2, sqrt(3)/2)``; they are stored as integer axial pairs ``(a, b)``
and scaled by the lattice spacing ``eps`` only when a Cartesian view is needed.

The six outer normals of the hexagonal Wulff shape are labelled clockwise,
starting from ``n1 = eta1^perp = (0, 1)``, so that ``n_{i+3} = -n_i`` and
consecutive normals make a 60 degree angle.  For every lattice point the
projection onto ``n_i`` is ``(sqrt(3)/2) * p_i(a, b)`` with an integer
``p_i``, see :data:`NORMAL_PROJECTION`.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

SQRT3 = math.sqrt(3.0)

ETA1 = np.array([1.0, 0.0])
ETA2 = np.array([0.5, SQRT3 / 2.0])
ETA3 = ETA1 - ETA2
ETAS = np.stack([ETA1, ETA2, ETA3])


def perp(v):
    """Counterclockwise rotation by pi/2."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


ETAS_PERP = perp(ETAS)

# Integer coefficients (ca, cb) with <a*eta1 + b*eta2, n_i> = (sqrt3/2)(ca*a + cb*b).
NORMAL_PROJECTION = (
    (0, 1),  # n1 = eta1^perp
    (1, 1),  # n2 = eta3^perp
    (1, 0),  # n3 = -eta2^perp
    (0, -1),  # n4 = -n1
    (-1, -1),  # n5 = -n2
    (-1, 0),  # n6 = -n3
)

NORMALS = np.array(
    [ETAS_PERP[0], ETAS_PERP[2], -ETAS_PERP[1], -ETAS_PERP[0], -ETAS_PERP[2], ETAS_PERP[1]]
)

# Counterclockwise from +eta1.
NEIGHBOR_OFFSETS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


class LatticePoint(NamedTuple):
    """Axial integer coordinates of a node of the triangular lattice."""

    a: int
    b: int

    def cartesian(self, eps: float = 1.0) -> np.ndarray:
        return eps * (self.a * ETA1 + self.b * ETA2)

    @classmethod
    def from_cartesian(cls, x, eps: float = 1.0) -> "LatticePoint":
        """Inverse of :meth:`cartesian`; axial coordinates are rounded to integers."""
        x = np.asarray(x, dtype=float) / eps
        b = 2.0 * x[1] / SQRT3
        a = x[0] - 0.5 * b
        return cls(int(round(a)), int(round(b)))

    def __add__(self, other):
        return LatticePoint(self.a + other[0], self.b + other[1])

    def __sub__(self, other):
        return LatticePoint(self.a - other[0], self.b - other[1])

    def __neg__(self):
        return LatticePoint(-self.a, -self.b)

    def projection(self, i: int) -> int:
        """Integer ``p_i`` with ``<point, n_i> = (sqrt3/2) * eps * p_i`` (``i`` is 1-based)."""
        ca, cb = NORMAL_PROJECTION[i - 1]
        return ca * self.a + cb * self.b


def neighbors(p) -> list[LatticePoint]:
    """The six nearest neighbours of ``p``, counterclockwise from ``p + eta1``."""
    a, b = p
    return [LatticePoint(a + da, b + db) for da, db in NEIGHBOR_OFFSETS]


def normal(i: int) -> np.ndarray:
    """Unit outer normal ``n_i`` for ``i`` in 1..6 (indices taken mod 6)."""
    return NORMALS[(i - 1) % 6]


def phi_hex(nu) -> np.ndarray | float:
    """Anisotropic surface tension ``(2/3) sum_k |<nu, eta_k>|``.

    Positively 1-homogeneous, so non-unit vectors are accepted.  Works on a
    single vector or on an array of shape ``(..., 2)``.
    """
    nu = np.asarray(nu, dtype=float)
    val = (2.0 / 3.0) * np.abs(nu @ ETAS.T).sum(axis=-1)
    return float(val) if val.ndim == 0 else val


def phi_hex_max_form(nu) -> np.ndarray | float:
    """Equivalent expression ``(4/3) max_k |<nu, eta_k>|``."""
    nu = np.asarray(nu, dtype=float)
    val = (4.0 / 3.0) * np.abs(nu @ ETAS.T).max(axis=-1)
    return float(val) if val.ndim == 0 else val


def phi_hex_dual(xi) -> np.ndarray | float:
    """Dual norm ``(sqrt3/2) max_k |<xi, eta_k^perp>|``; its unit ball is the Wulff shape."""
    xi = np.asarray(xi, dtype=float)
    val = (SQRT3 / 2.0) * np.abs(xi @ ETAS_PERP.T).max(axis=-1)
    return float(val) if val.ndim == 0 else val


def hex_units(a: int, b: int) -> int:
    """Hexagonal graph distance of ``a*eta1 + b*eta2`` from the origin.

    ``phi_hex_dual`` of the point equals ``3/4`` times this integer.
    """
    return max(abs(a), abs(b), abs(a + b))


def phi_hex_dual_lattice(p, eps: float = 1.0) -> float:
    """``phi_hex_dual(eps * p)`` for a lattice point, through the integer formula."""
    return 0.75 * eps * hex_units(p[0], p[1])


def wulff_shape_vertices() -> np.ndarray:
    """Vertices of ``(4/3) conv(+-eta1, +-eta2, +-eta3)``, counterclockwise from ``(4/3, 0)``."""
    dirs = [ETA1, ETA2, ETA2 - ETA1, -ETA1, -ETA2, ETA1 - ETA2]
    return (4.0 / 3.0) * np.array(dirs)
