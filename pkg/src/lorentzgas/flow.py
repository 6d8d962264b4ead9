"""Event-driven billiard flow on the lifted table.

Free flight is exact (piecewise linear, unit speed); the next-collision search
walks the ray through the disk rows y = q in temporal order, so each flight
costs O(path length), never a global scan.  Wall crossings of every chord are
recorded as free-group letters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import (
    GRAZING_COS,
    TIE_TOL,
    BilliardTable,
    GrazingCollision,
    LiftedDisk,
    disk_from_column,
    reflect,
)
from .words import Letter

CORRIDOR_HORIZON = 1e3  # a flight longer than this marks the segment corridor-trapped


class NoCollisionWithinHorizon(Exception):
    """The free flight met no scatterer within the search horizon."""


@dataclass
class PhasePoint:
    x: float
    y: float
    vx: float
    vy: float
    t: float = 0.0


@dataclass
class CollisionEvent:
    time: float
    disk: LiftedDisk
    point: tuple[float, float]
    cos_phi: float  # cosine of the angle between the outgoing velocity and the outward normal


@dataclass
class FrontState:
    """Curvature state of an expanding local orthogonal front."""

    kappa: float = 0.0
    log_expansion: float = 0.0


@dataclass
class TrajectorySegment:
    initial: PhasePoint
    final: PhasePoint
    T: float
    events: list[CollisionEvent] = field(default_factory=list)
    letters: list[Letter] = field(default_factory=list)       # raw crossings, temporal order
    letter_times: list[float] = field(default_factory=list)
    abs_dx: float = 0.0   # sum of |x-displacement| over chords (exact, piecewise linear)
    abs_dy: float = 0.0
    degenerate: bool = False
    degenerate_reason: str = ""
    wall_tie: bool = False          # a chord endpoint sat on a wall within TIE_TOL
    corridor_trapped: bool = False  # a single free flight exceeded CORRIDOR_HORIZON

    @property
    def collisions(self) -> int:
        return len(self.events)


def next_collision(table: BilliardTable, x, y, vx, vy, horizon):
    """Earliest disk hit of the ray (x, y) + t (vx, vy) with t in (0, horizon].

    Returns (t, col, row, px, py) or None.  Disk centers live on the rows
    y = q at x = j/n, so candidates are enumerated per row band in temporal
    order and the first row producing a hit settles the search.
    """
    n = table.n
    r = table.r
    r2 = r * r

    if vy == 0.0:
        q = math.floor(y + 0.5)
        if abs(y - q) >= r:
            return None
        return _sweep_row(n, r2, x, y, vx, vy, horizon, q)

    s = 1 if vy > 0.0 else -1
    q = math.ceil(y - r) if s > 0 else math.floor(y + r)
    best = None
    while True:
        t_enter = ((q - s * r) - y) / vy
        if t_enter > horizon:
            break
        t_exit = ((q + s * r) - y) / vy
        lo = t_enter if t_enter > 0.0 else 0.0
        hi = t_exit if t_exit < horizon else horizon
        if hi >= lo:
            x0 = x + lo * vx
            x1 = x + hi * vx
            if x0 > x1:
                x0, x1 = x1, x0
            j0 = math.ceil((x0 - r) * n)
            j1 = math.floor((x1 + r) * n)
            for j in range(j0, j1 + 1):
                wx = x - j / n
                wy = y - q
                b = wx * vx + wy * vy
                disc = b * b - (wx * wx + wy * wy - r2)
                if disc <= 0.0:
                    continue
                t = -b - math.sqrt(disc)
                if 1e-12 < t <= horizon and (best is None or t < best[0]):
                    px = x + t * vx
                    py = y + t * vy
                    best = (t, j, q, px, py)
            if best is not None:
                return best
        q += s
    return None


def _sweep_row(n, r2, x, y, vx, vy, horizon, q):
    """Horizontal ray inside the band of row q: test columns in sweep order."""
    r = math.sqrt(r2)
    if vx > 0.0:
        j = math.ceil((x - r) * n)
        step = 1
        limit = (x + horizon * vx + r) * n
    else:
        j = math.floor((x + r) * n)
        step = -1
        limit = (x + horizon * vx - r) * n
    while (j <= limit) if step > 0 else (j >= limit):
        wx = x - j / n
        wy = y - q
        b = wx * vx + wy * vy
        disc = b * b - (wx * wx + wy * wy - r2)
        if disc > 0.0:
            t = -b - math.sqrt(disc)
            if 1e-12 < t <= horizon:
                return (t, j, q, x + t * vx, y + t * vy)
        j += step
    return None


def _endpoint_on_wall(table, x, y):
    """Whether (x, y) sits on an open wall segment within TIE_TOL."""
    n = table.n
    r = table.r
    cx = math.floor(x + 0.5)
    if abs(x - cx) < TIE_TOL:
        fy = y - math.floor(y)
        if r - TIE_TOL < fy < 1.0 - r + TIE_TOL:
            return True
    cy = math.floor(y + 0.5)
    if abs(y - cy) < TIE_TOL:
        fx = x - math.floor(x)
        off = fx * n - math.floor(fx * n)
        if r * n - TIE_TOL < off < 1.0 - r * n + TIE_TOL:
            return True
    return False


def wall_crossings_chord(table, ax, ay, bx, by, with_margin=False):
    """Signed wall crossings of the open chord from a to b.

    Returns (crossings, tie) where crossings is a list of (s, Letter) sorted
    by the chord fraction s in (0, 1); with_margin=True appends each
    crossing's transverse distance to the nearest disk shadow.  A crossing
    within TIE_TOL of a wall endpoint sets the tie flag instead of guessing;
    interior crossings inside disk shadows cannot occur for chords of genuine
    trajectories (those wall gaps are covered by disks).
    """
    n = table.n
    r = table.r
    dx = bx - ax
    dy = by - ay
    out = []
    tie = False

    if dx != 0.0:
        sgn = 1 if dx > 0.0 else -1
        lo, hi = (ax, bx) if dx > 0.0 else (bx, ax)
        c = math.floor(lo) + 1
        top = math.ceil(hi) - 1
        while c <= top:
            s = (c - ax) / dx
            if 0.0 < s < 1.0:
                fy = (ay + s * dy) % 1.0
                if r + TIE_TOL < fy < 1.0 - r - TIE_TOL:
                    if with_margin:
                        out.append((s, Letter(0, sgn),
                                    min(fy - r, 1.0 - r - fy)))
                    else:
                        out.append((s, Letter(0, sgn)))
                elif fy > r - TIE_TOL and fy < 1.0 - r + TIE_TOL:
                    tie = True
            c += 1

    if dy != 0.0:
        sgn = 1 if dy > 0.0 else -1
        lo, hi = (ay, by) if dy > 0.0 else (by, ay)
        c = math.floor(lo) + 1
        top = math.ceil(hi) - 1
        while c <= top:
            s = (c - ay) / dy
            if 0.0 < s < 1.0:
                fx = (ax + s * dx) % 1.0
                u = fx * n
                i0 = math.floor(u)
                off = u - i0
                if r * n + TIE_TOL < off < 1.0 - r * n - TIE_TOL:
                    if with_margin:
                        out.append((s, Letter(int(i0) % n + 1, sgn),
                                    min(off - r * n, 1.0 - r * n - off) / n))
                    else:
                        out.append((s, Letter(int(i0) % n + 1, sgn)))
                elif off > r * n - TIE_TOL and off < 1.0 - r * n + TIE_TOL:
                    tie = True
            c += 1

    out.sort(key=lambda p: p[0])
    return out, tie


def simulate(table: BilliardTable, p0: PhasePoint, T: float | None = None,
             max_collisions: int | None = None) -> TrajectorySegment:
    """Run the flow from p0 until time T or a collision count is reached.

    Alternates exact free flight with specular reflection, recording every
    collision and every wall crossing in temporal order.  Grazing collisions
    abort the segment with the degenerate flag set; a free flight longer than
    CORRIDOR_HORIZON only marks the segment corridor-trapped.
    """
    if T is None and max_collisions is None:
        raise ValueError("need a stop condition: T or max_collisions")
    x, y, vx, vy = p0.x, p0.y, p0.vx, p0.vy
    t = p0.t
    t_end = None if T is None else p0.t + T
    seg = TrajectorySegment(initial=PhasePoint(x, y, vx, vy, t),
                            final=PhasePoint(x, y, vx, vy, t), T=0.0)
    if _endpoint_on_wall(table, x, y):
        seg.wall_tie = True

    while True:
        if t_end is not None:
            rem = t_end - t
            if rem <= 1e-15:
                break
            horizon = rem
        else:
            horizon = CORRIDOR_HORIZON
        hit = next_collision(table, x, y, vx, vy, horizon)
        if hit is None:
            if t_end is None:
                seg.corridor_trapped = True
                break
            nx_ = x + rem * vx
            ny_ = y + rem * vy
            _record_chord(table, seg, x, y, nx_, ny_, t, rem)
            x, y, t = nx_, ny_, t_end
            break
        th, col, row, px, py = hit
        if th >= CORRIDOR_HORIZON:
            seg.corridor_trapped = True
        _record_chord(table, seg, x, y, px, py, t, th)
        t += th
        disk = disk_from_column(table, col, row)
        nx = (px - col / table.n) / table.r
        ny = (py - row) / table.r
        nn = math.hypot(nx, ny)
        nx /= nn
        ny /= nn
        try:
            vx, vy = reflect(vx, vy, nx, ny)
        except GrazingCollision as exc:
            x, y = px, py
            seg.degenerate = True
            seg.degenerate_reason = str(exc)
            break
        x, y = px, py
        seg.events.append(CollisionEvent(t, disk, (px, py), vx * nx + vy * ny))
        if max_collisions is not None and len(seg.events) >= max_collisions:
            break

    seg.final = PhasePoint(x, y, vx, vy, t)
    seg.T = t - p0.t
    if _endpoint_on_wall(table, x, y):
        seg.wall_tie = True
    return seg


def _record_chord(table, seg, ax, ay, bx, by, t0, length):
    seg.abs_dx += abs(bx - ax)
    seg.abs_dy += abs(by - ay)
    crossings, tie = wall_crossings_chord(table, ax, ay, bx, by)
    if tie:
        seg.wall_tie = True
    for s, let in crossings:
        seg.letters.append(let)
        seg.letter_times.append(t0 + s * length)


def collision_map(table: BilliardTable, disk: LiftedDisk, psi: float,
                  direction: tuple[float, float], horizon: float = CORRIDOR_HORIZON):
    """One step of the collision (Poincare section) map.

    From the boundary point of `disk` at angle psi with an outgoing direction,
    fly to the next collision and reflect.  Returns (disk', psi', direction',
    flight_time); raises NoCollisionWithinHorizon if the orbit escapes into a
    corridor, which the caller decides how to treat.
    """
    from .geometry import lifted_center

    cx, cy = lifted_center(table, disk)
    x = cx + table.r * math.cos(psi)
    y = cy + table.r * math.sin(psi)
    vx, vy = direction
    if vx * math.cos(psi) + vy * math.sin(psi) <= 0.0:
        raise ValueError("direction must point out of the disk")
    hit = next_collision(table, x, y, vx, vy, horizon)
    if hit is None:
        raise NoCollisionWithinHorizon(f"no scatterer within {horizon} time units")
    th, col, row, px, py = hit
    nx = (px - col / table.n) / table.r
    ny = (py - row) / table.r
    nn = math.hypot(nx, ny)
    nx /= nn
    ny /= nn
    wx, wy = reflect(vx, vy, nx, ny)
    nxt = disk_from_column(table, col, row)
    return nxt, math.atan2(py - row, px - col / table.n), (wx, wy), th


def lyapunov_accumulate(table: BilliardTable, front: FrontState,
                        segment: TrajectorySegment) -> float:
    """Run the curvature cocycle of an expanding front along a segment.

    Between collisions a convex front of curvature kappa dilates by
    (1 + tau kappa) while kappa evolves to kappa/(1 + tau kappa); each
    collision adds the dispersing jump 2/(r cos phi) >= 2/r.  Returns the
    finite-time Lyapunov estimate (sum of log dilations)/T.
    """
    if segment.degenerate:
        raise ValueError("degenerate trajectory: " + segment.degenerate_reason)
    t = segment.initial.t
    for ev in segment.events:
        tau = ev.time - t
        front.log_expansion += math.log1p(tau * front.kappa)
        front.kappa = front.kappa / (1.0 + tau * front.kappa)
        front.kappa += 2.0 / (table.r * ev.cos_phi)
        t = ev.time
    tau = (segment.initial.t + segment.T) - t
    if tau > 0.0:
        front.log_expansion += math.log1p(tau * front.kappa)
        front.kappa = front.kappa / (1.0 + tau * front.kappa)
    if segment.T <= 0.0:
        return 0.0
    return front.log_expansion / segment.T


def lyapunov_stream(table: BilliardTable, p0: PhasePoint, n_collisions: int):
    """Streaming Lyapunov estimate over a fixed number of collisions.

    Avoids storing events so very long runs stay cheap.  Returns
    (lambda_estimate, total_time, collisions); stops early if the orbit gets
    corridor-trapped or grazes.
    """
    x, y, vx, vy = p0.x, p0.y, p0.vx, p0.vy
    r = table.r
    kappa = 0.0
    acc = 0.0
    t = 0.0
    hits = 0
    while hits < n_collisions:
        hit = next_collision(table, x, y, vx, vy, CORRIDOR_HORIZON)
        if hit is None:
            break
        th, col, row, px, py = hit
        acc += math.log1p(th * kappa)
        kappa = kappa / (1.0 + th * kappa)
        nx = (px - col / table.n) / r
        ny = (py - row) / r
        nn = math.hypot(nx, ny)
        nx /= nn
        ny /= nn
        try:
            vx, vy = reflect(vx, vy, nx, ny)
        except GrazingCollision:
            break
        cos_phi = vx * nx + vy * ny
        kappa += 2.0 / (r * cos_phi)
        x, y, t = px, py, t + th
        hits += 1
    lam = acc / t if t > 0.0 else 0.0
    return lam, t, hits


def liouville_sample(table: BilliardTable, rng) -> PhasePoint:
    """Position uniform on the table (rejection-sampled against the disks),
    direction uniform on the circle: the invariant flow measure."""
    n = table.n
    r = table.r
    while True:
        x = rng.random()
        y = rng.random()
        j = math.floor(x * n + 0.5)
        if (x - j / n) ** 2 + y * y < r * r:
            continue
        if (x - j / n) ** 2 + (y - 1.0) ** 2 < r * r:
            continue
        break
    phi = 2.0 * math.pi * rng.random()
    return PhasePoint(x, y, math.cos(phi), math.sin(phi), 0.0)
