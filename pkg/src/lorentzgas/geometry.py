"""Exact planar geometry of the lifted billiard table.

Everything is computed in the universal cover plane: the scatterers of radius
r sit at (j/n, q) for integers j (global column) and q (row).  Positions are
never wrapped mod 1 -- lattice bookkeeping stays exact so that lift data
(winding, crossing words) cannot drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

GRAZING_COS = 1e-9   # |v . normal| below this is a degenerate tangential hit
HULL_TOL = 1e-12     # tangent hulls count as non-intersecting
TIE_TOL = 1e-12      # endpoint-on-wall tie detection


class GrazingCollision(RuntimeError):
    """A reflection would be tangential; the trajectory is degenerate."""


@dataclass(frozen=True)
class BilliardTable:
    """n disks of radius r centered at (i/n, 0) on the unit torus.

    The invariant 0 < r < 1/(2n) keeps the disks pairwise disjoint and every
    wall segment between neighbouring disks nonempty.
    """

    n: int
    r: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need n >= 1 scatterers, got n={self.n}")
        if not 0.0 < self.r < 1.0 / (2 * self.n):
            raise ValueError(
                f"need 0 < r < 1/(2n) = {1.0 / (2 * self.n):.8g}, got r={self.r!r}"
            )


@dataclass(frozen=True)
class LiftedDisk:
    """One lift of scatterer disk_id into the cover plane, shifted by cell."""

    disk_id: int
    cell: tuple[int, int]

    def column(self, table: BilliardTable) -> int:
        """Global column index j; the center sits at x = j/n."""
        return self.cell[0] * table.n + self.disk_id

    @property
    def row(self) -> int:
        return self.cell[1]


def disk_from_column(table: BilliardTable, col: int, row: int) -> LiftedDisk:
    return LiftedDisk(col % table.n, (col // table.n, row))


def lifted_center(table: BilliardTable, disk: LiftedDisk) -> tuple[float, float]:
    """Center of a lifted disk, (disk_id/n + p, q) exactly."""
    if not 0 <= disk.disk_id < table.n:
        raise ValueError(f"disk_id {disk.disk_id} out of range [0, {table.n})")
    p, q = disk.cell
    return (disk.disk_id / table.n + p, float(q))


def column_center(table: BilliardTable, col: int, row: int) -> tuple[float, float]:
    """Center of the disk in global column col, row row."""
    return (col / table.n, float(row))


def unit(vx: float, vy: float) -> tuple[float, float]:
    s = math.hypot(vx, vy)
    if s == 0.0:
        raise ValueError("zero vector has no direction")
    return (vx / s, vy / s)


def ray_disk_first_hit(ox, oy, dx, dy, cx, cy, r):
    """Smallest t > 0 with |o + t d - c| = r, or None if the ray misses.

    The origin must lie outside the open disk; an origin inside signals a
    corrupted flow state and raises.
    """
    wx = ox - cx
    wy = oy - cy
    c0 = wx * wx + wy * wy - r * r
    if c0 < -1e-12:
        raise ValueError("ray origin is inside the disk")
    b = wx * dx + wy * dy
    disc = b * b - c0
    if disc <= 0.0:
        return None
    t = -b - math.sqrt(disc)
    if t <= 1e-12:
        return None
    return t


def reflect(vx, vy, nx, ny):
    """Specular reflection v - 2(v.n)n of an incoming unit vector.

    Requires v.n < 0 (incoming); tangential hits within GRAZING_COS raise
    GrazingCollision, which callers treat as a degenerate trajectory.
    """
    d = vx * nx + vy * ny
    if abs(d) < GRAZING_COS:
        raise GrazingCollision(f"grazing hit, |cos phi| = {abs(d):.3e}")
    if d > 0.0:
        raise ValueError("velocity already points out of the boundary")
    rx = vx - 2.0 * d * nx
    ry = vy - 2.0 * d * ny
    s = math.hypot(rx, ry)
    return (rx / s, ry / s)


def point_segment_distance(px, py, ax, ay, bx, by):
    """Distance from point p to segment [a, b]; a == b degenerates to a point."""
    ux = bx - ax
    uy = by - ay
    den = ux * ux + uy * uy
    if den == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * ux + (py - ay) * uy) / den
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return math.hypot(px - (ax + t * ux), py - (ay + t * uy))


def disk_meets_stadium(other, c1, c2, r):
    """Whether a radius-r disk at `other` meets the open hull of two radius-r
    disks at c1, c2 (the radius-r stadium around [c1, c2]).

    Tangency counts as non-intersecting: the test is dist < 2r - HULL_TOL.
    """
    d = point_segment_distance(other[0], other[1], c1[0], c1[1], c2[0], c2[1])
    return d < 2.0 * r - HULL_TOL
