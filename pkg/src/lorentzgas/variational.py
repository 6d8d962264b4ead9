"""Shortest broken lines through admissible scatterer sequences.

The vertex on disk i is parametrized by a boundary angle theta_i; the path
length L(theta) is smooth away from degenerate tangencies, so a damped
Newton descent with the exact gradient and tridiagonal-plus-corners Hessian
converges to the unique taut path.  Obstacle avoidance is not a constraint:
admissibility of the input sequence is what keeps the minimizer obstacle
free, and that is verified after the fact rather than imposed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .admissibility import candidate_disks_near_segment, check_pair, check_sequence
from .flow import wall_crossings_chord
from .geometry import BilliardTable, LiftedDisk, column_center, lifted_center
from .words import Letter, reduce_letters, word_to_text

GRAD_TOL = 1e-11       # sup-norm target for dL/dtheta
MAX_NEWTON = 200


class ConvergenceError(RuntimeError):
    """The minimizer failed to reach the gradient tolerance."""


@dataclass
class BrokenPath:
    table: BilliardTable
    disks: list[LiftedDisk]
    mode: str                          # "free" | "periodic" | "pinned"
    theta: np.ndarray
    length: float
    grad_norm: float                   # sup norm at the solution
    offset: tuple[int, int] | None = None   # lattice translation in periodic mode
    converged: bool = True
    obstacle_clear: bool = True

    def vertices(self) -> np.ndarray:
        cs = _centers(self.table, self.disks)
        r = self.table.r
        return cs + r * np.stack([np.cos(self.theta), np.sin(self.theta)], axis=1)

    def segment_points(self) -> np.ndarray:
        """Vertex list with the wrap vertex appended in periodic mode."""
        v = self.vertices()
        if self.mode == "periodic":
            a, b = self.offset
            return np.vstack([v, v[0] + np.array([a, b], dtype=float)])
        return v

    def reflection_residuals(self) -> np.ndarray:
        """Tangential momentum mismatch per vertex; zero is the specular law.

        In free mode the first and last entries measure perpendicularity of
        the endpoint segments instead.
        """
        pts = self.segment_points()
        segs = np.diff(pts, axis=0)
        lens = np.linalg.norm(segs, axis=1)
        u = segs / lens[:, None]
        t_hat = np.stack([-np.sin(self.theta), np.cos(self.theta)], axis=1)
        n = len(self.theta)
        res = np.empty(n)
        if self.mode == "periodic":
            u_in = np.roll(u, 1, axis=0)
            res = np.abs(np.einsum("ij,ij->i", u_in - u, t_hat))
        else:
            res[0] = abs(np.dot(u[0], t_hat[0]))
            res[-1] = abs(np.dot(u[-1], t_hat[-1]))
            for i in range(1, n - 1):
                res[i] = abs(np.dot(u[i - 1] - u[i], t_hat[i]))
        return res

    def crossing_events(self):
        """(time, Letter) wall crossings along the path, unit speed."""
        pts = self.segment_points()
        out = []
        t0 = 0.0
        for k in range(len(pts) - 1):
            ax, ay = pts[k]
            bx, by = pts[k + 1]
            seg = math.hypot(bx - ax, by - ay)
            crossings, _ = wall_crossings_chord(self.table, ax, ay, bx, by)
            out.extend((t0 + s * seg, let) for s, let in crossings)
            t0 += seg
        return out

    def word(self) -> list[Letter]:
        return reduce_letters(let for _, let in self.crossing_events())


@dataclass
class PeriodicOrbit:
    path: BrokenPath
    closure: str                       # "translation" | "doubling"
    period: float
    word: list[Letter]                 # reduced word of one period
    speed: float                       # |word| / period
    extension: int = 0                 # disks appended to close up

    @property
    def rotation(self):
        from .rotation import RotationVector
        from .words import word_prefix
        return RotationVector(self.speed, word_prefix(self.word))


def _centers(table, disks) -> np.ndarray:
    return np.array([lifted_center(table, d) for d in disks], dtype=float)


def _geometry(theta, centers, r, mode, offset):
    """Vertices, segment unit vectors and lengths for the current angles."""
    v = centers + r * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if mode == "periodic":
        pts = np.vstack([v, v[0] + np.asarray(offset, dtype=float)])
    else:
        pts = v
    segs = np.diff(pts, axis=0)
    lens = np.linalg.norm(segs, axis=1)
    if np.any(lens < 1e-14):
        raise ConvergenceError("degenerate segment (coincident vertices)")
    u = segs / lens[:, None]
    return v, u, lens


def _length_grad(theta, centers, r, mode, offset):
    v, u, lens = _geometry(theta, centers, r, mode, offset)
    t_hat = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    n = len(theta)
    g = np.zeros(n)
    if mode == "periodic":
        u_in = np.roll(u, 1, axis=0)
        g = r * np.einsum("ij,ij->i", u_in - u, t_hat)
    else:
        g[:-1] -= r * np.einsum("ij,ij->i", u, t_hat[:-1])
        g[1:] += r * np.einsum("ij,ij->i", u, t_hat[1:])
    return float(lens.sum()), g


def _hessian(theta, centers, r, mode, offset):
    """Dense Hessian of the path length (tridiagonal, plus periodic corners)."""
    v, u, lens = _geometry(theta, centers, r, mode, offset)
    n = len(theta)
    a = r * np.stack([-np.sin(theta), np.cos(theta)], axis=1)    # dv/dtheta
    app = -(r * np.stack([np.cos(theta), np.sin(theta)], axis=1))  # d2v/dtheta2
    H = np.zeros((n, n))
    nseg = len(lens)
    for s in range(nseg):
        i = s
        j = (s + 1) % n if mode == "periodic" else s + 1
        us = u[s]
        d = lens[s]
        # P = (I - u u^T)/d applied to the variation vectors
        Pai = (a[i] - us * np.dot(us, a[i])) / d
        Paj = (a[j] - us * np.dot(us, a[j])) / d
        H[i, i] += np.dot(a[i], Pai) - np.dot(us, app[i])
        H[j, j] += np.dot(a[j], Paj) + np.dot(us, app[j])
        cross = -np.dot(a[i], Paj)
        H[i, j] += cross
        H[j, i] += cross
    return H


def _initial_theta(centers, mode, offset):
    """Angles aimed at the wedge bisector of the neighbouring centers (the
    first-order position of the true reflection point)."""
    n = len(centers)
    if mode == "periodic":
        off = np.asarray(offset, dtype=float)
        prev = np.vstack([centers[-1] - off, centers[:-1]])
        nxt = np.vstack([centers[1:], centers[0] + off])
    else:
        prev = np.vstack([centers[0], centers[:-1]])
        nxt = np.vstack([centers[1:], centers[-1]])
    theta = np.empty(n)
    for i in range(n):
        if mode != "periodic" and i == 0:
            d = nxt[i] - centers[i]
            theta[i] = math.atan2(d[1], d[0])   # face the single neighbour
            continue
        if mode != "periodic" and i == n - 1:
            d = prev[i] - centers[i]
            theta[i] = math.atan2(d[1], d[0])
            continue
        ain = centers[i] - prev[i]
        aout = nxt[i] - centers[i]
        sa = np.linalg.norm(ain)
        sb = np.linalg.norm(aout)
        nx = aout[0] / sb - ain[0] / sa
        ny = aout[1] / sb - ain[1] / sa
        if math.hypot(nx, ny) < 1e-12:
            nx, ny = -ain[1] / sa, ain[0] / sa
        theta[i] = math.atan2(ny, nx)
    return theta


def minimize_path(table: BilliardTable, disks: list[LiftedDisk], mode: str = "free",
                  offset: tuple[int, int] | None = None,
                  theta0: np.ndarray | None = None,
                  max_iter: int = 10_000) -> BrokenPath:
    """Find the shortest broken line with one vertex per disk.

    mode "free": endpoints slide on their circles, so the taut path launches
    perpendicular to the first and last disk.  mode "periodic": the vertex
    after the last is vertex 0 translated by `offset` (lattice units).  mode
    "pinned": theta0's first and last entries are held fixed.

    Raises ConvergenceError when the gradient tolerance cannot be met within
    the iteration budget; sets obstacle_clear=False when the minimizer left
    the admissible class (a hard failure for admissible input).
    """
    if mode not in ("free", "periodic", "pinned"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "periodic" and offset is None:
        raise ValueError("periodic mode needs a lattice offset")
    if len(disks) < 2 and mode != "periodic":
        raise ValueError("need at least two disks")
    centers = _centers(table, disks)
    r = table.r
    theta = np.array(theta0, dtype=float) if theta0 is not None \
        else _initial_theta(centers, mode, offset)

    fixed = []
    if mode == "pinned":
        fixed = [0, len(theta) - 1]

    lam = 1e-9
    length, g = _length_grad(theta, centers, r, mode, offset)
    for fi in fixed:
        g[fi] = 0.0
    it = 0
    while np.max(np.abs(g)) > GRAD_TOL:
        it += 1
        if it > min(MAX_NEWTON, max_iter):
            raise ConvergenceError(
                f"no convergence after {it - 1} Newton steps "
                f"(|grad|_inf = {np.max(np.abs(g)):.3e})")
        H = _hessian(theta, centers, r, mode, offset)
        for fi in fixed:
            H[fi, :] = 0.0
            H[:, fi] = 0.0
            H[fi, fi] = 1.0
        while True:
            try:
                # positive definiteness keeps every step a descent direction
                chol = np.linalg.cholesky(H + lam * np.eye(len(theta)))
                step = np.linalg.solve(chol.T, np.linalg.solve(chol, -g))
            except np.linalg.LinAlgError:
                lam = max(lam * 10.0, 1e-8)
                continue
            cand = theta + step
            try:
                new_len, new_g = _length_grad(cand, centers, r, mode, offset)
            except ConvergenceError:
                lam *= 10.0
                continue
            for fi in fixed:
                new_g[fi] = 0.0
            if new_len <= length + 1e-12 or np.max(np.abs(new_g)) < np.max(np.abs(g)):
                theta, length, g = cand, new_len, new_g
                lam = max(lam / 10.0, 1e-12)
                break
            lam *= 10.0
            if lam > 1e8:
                raise ConvergenceError("Levenberg damping diverged")

    path = BrokenPath(table, list(disks), mode, theta, length,
                      float(np.max(np.abs(g))), offset)
    path.obstacle_clear = _segments_clear(table, path)
    return path


def _segments_clear(table, path: BrokenPath) -> bool:
    """Post-hoc check that no segment cuts through a disk interior."""
    pts = path.segment_points()
    disks = path.disks
    n_d = len(disks)
    r = table.r
    for k in range(len(pts) - 1):
        a = (pts[k][0], pts[k][1])
        b = (pts[k + 1][0], pts[k + 1][1])
        own = set()
        own.add((disks[k % n_d].column(table), disks[k % n_d].row))
        kk = (k + 1) % n_d
        if path.mode == "periodic" and k + 1 == len(pts) - 1:
            d0 = disks[0]
            a_off, b_off = path.offset
            own.add((d0.column(table) + a_off * table.n, d0.row + b_off))
        else:
            own.add((disks[kk].column(table), disks[kk].row))
        for col, row in candidate_disks_near_segment(table, a, b, r):
            if (col, row) in own:
                continue
            from .geometry import point_segment_distance
            if point_segment_distance(col / table.n, row, a[0], a[1], b[0], b[1]) \
                    < r - 1e-12:
                return False
    return True


# ---------------------------------------------------------------------------
# Passage times


_CASE_WORDS = {
    # worst-case two-letter passages, one per non-isomorphic class
    "wall_then_gap": lambda n: [Letter(0, 1), Letter(n, 1)],
    "gap_then_gap_inverse": lambda n: [Letter(1, 1), Letter(n, -1)],
    "wall_then_wall": lambda n: [Letter(0, 1), Letter(0, 1)],
    "gap_then_gap": lambda n: [Letter(1, 1), Letter(n, 1)],
}

_CASE_BOUNDS = {
    "wall_then_gap": (math.sqrt(5.0), 2),        # sqrt(5) + O(1/n^2)
    "gap_then_gap_inverse": (math.sqrt(5.0), 1),  # sqrt(5) + O(1/n)
    "wall_then_wall": (math.sqrt(2.0), 0),        # sqrt(2) exactly
    "gap_then_gap": (math.sqrt(2.0), 1),          # sqrt(2) + O(1/n)
}


def passage_times(path: BrokenPath) -> list[float]:
    """Flight times between consecutive wall crossings along a path."""
    events = path.crossing_events()
    return [events[k + 1][0] - events[k][0] for k in range(len(events) - 1)]


def passage_time_table(table: BilliardTable, r_rule=None) -> dict:
    """Realize the four worst-case two-letter passages and measure them.

    Each entry reports the measured passage duration, the constant part of
    its bound, the order of the allowed correction term, and the fitted
    correction constant max(0, measured - const) * n^order.
    """
    from .admissibility import realize_word

    n = table.n
    if n < 2:
        raise ValueError("passage constructions need n >= 2")
    out = {}
    for case, make in _CASE_WORDS.items():
        word = make(n)
        realized = realize_word(table, word)
        path = minimize_path(table, realized.disks, mode="free")
        events = path.crossing_events()
        if len(events) != 2:
            raise RuntimeError(f"{case}: expected 2 crossings, got {len(events)}")
        measured = events[1][0] - events[0][0]
        const, order = _CASE_BOUNDS[case]
        fitted = max(0.0, measured - const) * n ** order
        out[case] = {
            "word": word_to_text(word),
            "measured": measured,
            "bound_const": const,
            "order": order,
            "fitted_const": fitted,
        }
    return out


# ---------------------------------------------------------------------------
# Periodic closure


class NoClosureWithinBudget(RuntimeError):
    """No admissible periodic extension was found within the length budget."""


def periodic_closure(table: BilliardTable, disks: list[LiftedDisk],
                     max_extension: int = 10) -> PeriodicOrbit:
    """Close an admissible sequence into a translation-periodic orbit.

    Appends at most `max_extension` disks so that the appended endpoint is a
    lattice translate of the first disk and the wrap-around triple is
    admissible, then minimizes in translation mode.  Raise the budget if the
    sequence ends in an awkward pocket.
    """
    n = table.n
    if len(disks) < 2:
        raise ValueError("need at least two disks")
    cols = [d.column(table) for d in disks]
    rows = [d.row for d in disks]
    start = (cols[0], rows[0])
    cur = (cols[-1], rows[-1])
    prev = (cols[-2], rows[-2])

    best = None
    for da in (0, 1, -1, 2, -2):
        for db in (0, 1, -1, 2, -2):
            a = round((cur[0] - start[0]) / n) + da
            b = cur[1] - start[1] + db
            target = (start[0] + a * n, start[1] + b)
            ext = _route(table, prev, cur, target, max_extension)
            if ext is None:
                continue
            seam_ok = _seam_admissible(table, disks, ext, (a, b))
            if seam_ok and (best is None or len(ext) < len(best[0])):
                best = (ext, (a, b))
    if best is None:
        raise NoClosureWithinBudget(
            f"no admissible closure within {max_extension} extra disks")
    ext, offset = best
    if ext:
        all_disks = list(disks) + [LiftedDisk(c % n, (c // n, q)) for c, q in ext[:-1]]
    else:
        # sequence already ends at the translated start disk: drop the copy
        all_disks = list(disks[:-1])
        if len(all_disks) < 2:
            raise ValueError("degenerate closure: sequence too short")
    path = minimize_path(table, all_disks, mode="periodic", offset=offset)
    word = path.word()
    period = path.length
    speed = len(word) / period if period > 0 else 0.0
    return PeriodicOrbit(path, "translation", period, word, speed,
                         extension=len(ext))


def _route(table, prev, cur, target, budget):
    """Steps from cur to target, one row at a time, greedy with small jitter.

    Returns the anchor list ending exactly at target (inclusive) or None.
    """
    n = table.n
    from .admissibility import check_pair as _cp, check_triple as _ct
    from .geometry import disk_from_column as _dc

    path = []
    p_prev, p_cur = prev, cur
    for _ in range(budget):
        if p_cur == target:
            return path
        drow_needed = target[1] - p_cur[1]
        dcol_needed = target[0] - p_cur[0]
        if drow_needed != 0:
            drow = 1 if drow_needed > 0 else -1
        else:
            drow = 1 if p_prev[1] <= p_cur[1] else -1
            if abs(dcol_needed) == 0:
                drow = -1 if p_prev[1] <= p_cur[1] else 1
        reach = max(-n, min(n, dcol_needed))
        placed = None
        for jitter in (0, 1, -1, 2, -2, 3, -3):
            cand = (p_cur[0] + reach + jitter, p_cur[1] + drow)
            if cand == p_cur:
                continue
            d_prev = _dc(table, *p_prev)
            d_cur = _dc(table, *p_cur)
            d_new = _dc(table, *cand)
            if not _cp(table, d_cur, d_new):
                continue
            if not _ct(table, d_prev, d_cur, d_new):
                continue
            placed = cand
            break
        if placed is None:
            return None
        path.append(placed)
        p_prev, p_cur = p_cur, placed
    return path if p_cur == target else None


def _seam_admissible(table, disks, ext, offset):
    """Wrap-around conditions for the closed sequence."""
    n = table.n
    a, b = offset
    from .geometry import disk_from_column as _dc

    chain = [(d.column(table), d.row) for d in disks] + list(ext)
    # chain[-1] is the translated copy of chain-start; the wrap continues at
    # disks[1] translated.
    last = chain[-1]
    before = chain[-2]
    d1_t = (disks[1].column(table) + a * n, disks[1].row + b) if len(disks) > 1 else None
    trip = (_dc(table, *before), _dc(table, *last), _dc(table, *d1_t))
    if not check_pair(table, trip[0], trip[1]):
        return False
    if not check_triple(table, *trip):
        return False
    # consecutive pairs/triples inside the extension
    for k in range(len(chain) - 2, len(chain) - len(ext) - 1, -1):
        if not check_pair(table, _dc(table, *chain[k]), _dc(table, *chain[k + 1])):
            return False
    return True
