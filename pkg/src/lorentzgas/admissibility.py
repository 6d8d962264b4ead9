"""Admissibility of lifted scatterer sequences, and word realization.

A scatterer sequence is admissible when (i) consecutive disks are distinct
and the convex hull of each consecutive pair meets no other disk, and (ii)
no disk meets the hull of its two neighbours in the sequence.  Admissibility
is exactly what pins the crossing word of a sequence: every chord between
points of two hull-disjoint disks crosses the same walls, so the word can be
designed combinatorially and survives the variational minimization.

realize_word builds, for any reduced word, an admissible anchor sequence
whose orbit spells the word: letters for the vertical wall family ride
diagonal chords that cross one column line mid-flight, letters for the
horizontal gaps ride near-vertical chords that pass a gap right next to an
anchor on the gap's edge ("arc visits"), and sign flips insert a one-row
U-turn.  Each passage costs at most about sqrt(5) flight time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import (
    BilliardTable,
    LiftedDisk,
    column_center,
    disk_from_column,
    disk_meets_stadium,
    lifted_center,
    point_segment_distance,
)
from .flow import wall_crossings_chord
from .words import Letter, reduce_letters, word_to_text


class RealizationError(RuntimeError):
    """The planner could not realize a word (or its output failed the audit).

    `blame` optionally names the word position whose choice caused the
    failure, steering the planner's backtracking.
    """

    def __init__(self, msg, blame=None):
        super().__init__(msg)
        self.blame = blame


def candidate_disks_near_segment(table, a, b, radius):
    """(col, row) of every disk center within `radius` of segment [a, b].

    Walks the rows the inflated segment touches and, per row, the column
    interval actually swept, so the cost is O(segment length), not a box scan.
    """
    n = table.n
    ax, ay = a
    bx, by = b
    out = []
    q_lo = math.floor(min(ay, by) - radius)
    q_hi = math.ceil(max(ay, by) + radius)
    dy = by - ay
    for q in range(q_lo, q_hi + 1):
        if dy != 0.0:
            t0 = ((q - radius) - ay) / dy
            t1 = ((q + radius) - ay) / dy
            if t0 > t1:
                t0, t1 = t1, t0
            t0 = max(0.0, t0)
            t1 = min(1.0, t1)
            if t0 > t1:
                continue
            x0 = ax + t0 * (bx - ax)
            x1 = ax + t1 * (bx - ax)
        else:
            if abs(q - ay) > radius:
                continue
            x0, x1 = ax, bx
        if x0 > x1:
            x0, x1 = x1, x0
        j0 = math.ceil((x0 - radius) * n)
        j1 = math.floor((x1 + radius) * n)
        for j in range(j0, j1 + 1):
            if point_segment_distance(j / n, q, ax, ay, bx, by) <= radius:
                out.append((j, q))
    return out


def check_pair(table: BilliardTable, d1: LiftedDisk, d2: LiftedDisk) -> bool:
    """Condition (i) for one consecutive pair."""
    if d1 == d2:
        return False
    c1 = lifted_center(table, d1)
    c2 = lifted_center(table, d2)
    own = {(d1.column(table), d1.row), (d2.column(table), d2.row)}
    for col, row in candidate_disks_near_segment(table, c1, c2, 2.0 * table.r):
        if (col, row) in own:
            continue
        if disk_meets_stadium(column_center(table, col, row), c1, c2, table.r):
            return False
    return True


def check_triple(table: BilliardTable, d_prev: LiftedDisk, d_mid: LiftedDisk,
                 d_next: LiftedDisk) -> bool:
    """Condition (ii): the middle disk avoids the hull of its neighbours."""
    return not disk_meets_stadium(
        lifted_center(table, d_mid),
        lifted_center(table, d_prev),
        lifted_center(table, d_next),
        table.r,
    )


@dataclass
class AdmissibleSequence:
    """A scatterer sequence with its per-index validity certificate."""

    disks: list[LiftedDisk]
    pair_ok: list[bool]     # pair_ok[i] for (disks[i], disks[i+1])
    triple_ok: list[bool]   # triple_ok[i] for (disks[i-1], disks[i], disks[i+1])

    @property
    def admissible(self) -> bool:
        return all(self.pair_ok) and all(self.triple_ok)

    def to_json(self) -> list[list[int]]:
        return [[d.disk_id, d.cell[0], d.cell[1]] for d in self.disks]

    @staticmethod
    def disks_from_json(data) -> list[LiftedDisk]:
        return [LiftedDisk(int(i), (int(p), int(q))) for i, p, q in data]


def check_sequence(table: BilliardTable, disks: list[LiftedDisk]) -> AdmissibleSequence:
    if len(disks) < 2:
        raise ValueError("need at least two disks")
    pair_ok = [check_pair(table, disks[i], disks[i + 1]) for i in range(len(disks) - 1)]
    triple_ok = [
        check_triple(table, disks[i - 1], disks[i], disks[i + 1])
        for i in range(1, len(disks) - 1)
    ]
    return AdmissibleSequence(list(disks), pair_ok, triple_ok)


# ---------------------------------------------------------------------------
# Word realization


def _span_clean(n, c1, c2):
    """No multiple of n strictly between columns c1 and c2."""
    lo, hi = (c1, c2) if c1 <= c2 else (c2, c1)
    first = (math.floor(lo / n) + 1) * n
    return first >= hi


@dataclass
class RealizedWord:
    word: list[Letter]                 # target (reduced)
    anchors: list[tuple[int, int]]     # (column, row) lattice anchors
    disks: list[LiftedDisk]
    designed_points: list[tuple[float, float]]
    certificate: AdmissibleSequence
    idle_pairs: int = 0
    raw_letters: list[Letter] = field(default_factory=list)

    @property
    def sequence(self) -> AdmissibleSequence:
        return self.certificate


_NUDGE = 0.03
_WEDGE_MIN = 0.08  # radians; breaks exact symmetric-wedge ties deterministically


def designed_points(table, anchors):
    """Approximate bounce points: each interior anchor takes the angle
    bisector of its polyline wedge (the first-order position of the true
    reflection point, nudged a hair so symmetric wedges never land a bounce
    exactly on a wall line); the ends sit opposite their single neighbour."""
    n = table.n
    r = table.r
    cs = [(c / n, float(q)) for c, q in anchors]
    pts = []
    for k, (cx, cy) in enumerate(cs):
        if k == 0:
            # facing the neighbour: the free-endpoint bounce of the taut path
            ux, uy = cs[1][0] - cx, cs[1][1] - cy
            s = math.hypot(ux, uy)
            nx, ny = ux / s, uy / s
        elif k == len(cs) - 1:
            ux, uy = cs[k - 1][0] - cx, cs[k - 1][1] - cy
            s = math.hypot(ux, uy)
            nx, ny = ux / s, uy / s
        else:
            ax, ay = cx - cs[k - 1][0], cy - cs[k - 1][1]
            sa = math.hypot(ax, ay)
            bx, by = cs[k + 1][0] - cx, cs[k + 1][1] - cy
            sb = math.hypot(bx, by)
            nx = bx / sb - ax / sa
            ny = by / sb - ay / sa
            s = math.hypot(nx, ny)
            if s < 1e-9:
                raise RealizationError(f"straight-through turn at anchor {k}")
            nx /= s
            ny /= s
            nx, ny = (nx - _NUDGE * ny, ny + _NUDGE * nx)
            s = math.hypot(nx, ny)
            nx /= s
            ny /= s
        pts.append((cx + r * nx, cy + r * ny))
    return pts


def polyline_letters(table, points):
    """Wall crossings of a polyline, concatenated in order."""
    letters = []
    tie = False
    for k in range(len(points) - 1):
        crossings, t = wall_crossings_chord(
            table, points[k][0], points[k][1], points[k + 1][0], points[k + 1][1])
        tie = tie or t
        letters.extend(let for _, let in crossings)
    return letters, tie


class _Planner:
    """Backtracking per-letter planner.

    State: the last anchor (column m, row R) and the vertical trend t of the
    chord about to leave it; every anchor is a disk of the lifted table.
    Each letter offers a handful of candidate anchor extensions (gap lift,
    edge disk, connector direction).  A candidate is kept only while the
    admissibility checks pass and the finalized part of the designed polyline
    still spells a prefix of the target word; dead ends backtrack.
    """

    def __init__(self, table, word, idle_rate=0.0):
        self.table = table
        self.n = table.n
        self.word = word
        self.idle_rate = idle_rate
        self.idle_pairs = 0
        self.anchors: list[tuple[int, int]] = []
        self.trend = 1
        self.letter_anchor: list[int] = []  # anchor index carrying each letter
        self._chords: list = []             # per-chord (length, crossings) cache
        # passage budget: the constructive guarantee that consecutive wall
        # crossings stay within sqrt(5)+O(1/n) flight time (sqrt(2) between
        # consecutive vertical-wall letters); None disables the check
        n = table.n
        self.passage_budget = (math.sqrt(5.0) + max(0.04, 2.0 / n),
                               math.sqrt(2.0) + 0.02)

    # -- state bookkeeping

    def _snapshot(self):
        return (len(self.anchors), self.trend, len(self.letter_anchor), self.idle_pairs)

    def _restore(self, snap):
        na, t, nl, ip = snap
        del self.anchors[na:]
        del self.letter_anchor[nl:]
        self.trend = t
        self.idle_pairs = ip
        del self._chords[max(0, na - 4):]

    # -- primitive anchor operations

    def _push(self, col, row):
        prev = self.anchors[-1]
        if (col, row) == prev:
            raise RealizationError("consecutive anchors coincide")
        d_new = disk_from_column(self.table, col, row)
        d_prev = disk_from_column(self.table, *prev)
        if not check_pair(self.table, d_prev, d_new):
            raise RealizationError(f"pair {prev}->{(col, row)} blocked")
        if len(self.anchors) >= 2:
            d_pp = disk_from_column(self.table, *self.anchors[-2])
            if not check_triple(self.table, d_pp, d_prev, d_new):
                raise RealizationError(f"triple at {prev} too straight")
        self.anchors.append((col, row))

    def _refresh_chords(self, final):
        """Update the per-chord crossing cache; only the last few chords can
        have changed since the previous audit (bounce points are local)."""
        m = len(self.anchors)
        last = m - 1 if final else m - 2  # chords [0, last) are auditable
        if last <= 0:
            return []
        lo = max(0, min(len(self._chords), m - 4))
        del self._chords[lo:]
        if lo < last:
            a0 = max(0, lo - 1)
            pts = designed_points(self.table, self.anchors[a0:]) if a0 == 0 else \
                designed_points(self.table, self.anchors[a0 - 1:])[1:]
            # pts[j] corresponds to anchor a0 + j; interior bisectors correct
            for k in range(lo, last):
                i = k - a0
                ax, ay = pts[i]
                bx, by = pts[i + 1]
                crossings, tie = wall_crossings_chord(
                    self.table, ax, ay, bx, by, with_margin=True)
                if tie:
                    raise RealizationError(f"wall tie on chord {k}")
                seg = math.hypot(bx - ax, by - ay)
                self._chords.append(
                    (seg, [(s * seg, let) for s, let, _ in crossings]))
        self._check_wedges(m)
        return self._chords[:last]


    def _check_wedges(self, m):
        """Letter-carrying anchors need a clearly tilted reflection wedge.

        A horizontal-wall letter crosses right next to its anchor; when the
        wedge bisector is nearly horizontal the bounce sits on the wall row
        itself and the crossing degenerates, so the true minimizer may spell
        a different word than the designed polyline.  Only anchors near the
        live end can be new, so older ones are not rechecked until the end.
        """
        for j, idx in enumerate(self.letter_anchor):
            if self.word[j].index == 0:
                continue
            if not (1 <= idx <= m - 2):
                continue
            if idx < m - 5:
                continue  # validated while it was within the fresh window
            if self._bad_wedge(self.anchors[idx - 1], self.anchors[idx],
                               self.anchors[idx + 1]):
                raise RealizationError(
                    f"flat wedge at letter {j} anchor {self.anchors[idx]}",
                    blame=j)

    def _bad_wedge(self, c0, c1, c2):
        """A pass-through wedge whose bisector is nearly horizontal puts the
        bounce on the wall row itself, so the adjacent crossing degenerates.
        Same-side visits (both neighbours left, or both right) are robust
        regardless of tilt: the path wraps one side of the disk."""
        d_in = c1[0] - c0[0]
        d_out = c2[0] - c1[0]
        if d_in == 0 or d_out == 0 or (d_in > 0) != (d_out > 0):
            return False  # reversal or vertical leg: a same-side visit
        n = self.n
        ax, ay = d_in / n, c1[1] - c0[1]
        bx, by = d_out / n, c2[1] - c1[1]
        sa = math.hypot(ax, ay)
        sb = math.hypot(bx, by)
        ny = by / sb - ay / sa
        nx = bx / sb - ax / sa
        s = math.hypot(nx, ny)
        return s < 1e-12 or abs(ny / s) < _WEDGE_MIN

    def _audit(self, final=False):
        """Crossing word of the finalized chords must be a prefix of the
        target (idle-pair crossings cancel in the reduction), every letter
        whose anchor has two committed successors must already show, and no
        two consecutive crossings may be further apart than the passage
        budget (the constructive speed guarantee)."""
        chords = self._refresh_chords(final)
        letters: list[Letter] = []
        times: list[float] = []
        t0 = 0.0
        for seg, crossings in chords:
            for off, let in crossings:
                letters.append(let)
                times.append(t0 + off)
            t0 += seg
        red = reduce_letters(letters)
        if red != self.word[:len(red)]:
            bad = next(i for i in range(len(red))
                       if i >= len(self.word) or red[i] != self.word[i])
            raise RealizationError(
                f"prefix mismatch: got {word_to_text(red)!r}", blame=bad)
        if final:
            need = len(self.letter_anchor)
        else:
            need = sum(1 for a in self.letter_anchor if a + 3 <= len(self.anchors))
        if len(red) < need:
            raise RealizationError(
                f"missing crossings: {len(red)} realized, {need} due",
                blame=len(red))
        if self.passage_budget is not None:
            gen, a2a = self.passage_budget
            for j in range(len(times) - 1):
                gap = times[j + 1] - times[j]
                cap = a2a if (letters[j].index == 0 and letters[j + 1].index == 0) \
                    else gen
                if gap > cap:
                    raise RealizationError(
                        f"passage {letters[j].text()}->{letters[j + 1].text()} "
                        f"takes {gap:.3f} > {cap:.3f}",
                        blame=len(reduce_letters(letters[:j + 1])))

    # -- variant generation (pure: no state mutation)

    def _gap_lifts(self, i, around):
        """Columns g with gap (g, g+1) a lift of wall gap i, nearest first."""
        base = (i - 1) + self.n * round((around - (i - 1)) / self.n)
        return [base, base - self.n, base + self.n]

    @staticmethod
    def _edge_order(g, m):
        # far edge first: approaching from the left wraps the right edge disk
        if m <= g:
            return (g + 1, g)
        return (g, g + 1)

    def _edge_pref(self, g, m_from, k):
        """Edge disks for gap (g, g+1), best first.

        The crossing lands on the side of the anchor that the reflection
        normal points to, and the normal follows the difference of the unit
        leg directions; estimating the outgoing leg from the next letter
        picks the edge whose side is the gap interior.
        """
        n = self.n
        ux_in = (g + 0.5 - m_from) / n
        s_in = math.hypot(ux_in, 1.0)
        nxt = self.word[k + 1] if k + 1 < len(self.word) else None
        if nxt is None:
            return self._edge_order(g, m_from)
        if nxt.index == 0:
            ux_out = float(nxt.sign)          # diagonal: strongly horizontal
            s_out = math.hypot(ux_out, 1.0)
        else:
            base = (nxt.index - 1) + n * round((g + 0.5 - (nxt.index - 1)) / n)
            ux_out = (base + 0.5 - (g + 0.5)) / n
            s_out = math.hypot(ux_out, 1.0)
        nx = ux_out / s_out - ux_in / s_in
        if abs(nx) < 1e-9:
            return self._edge_order(g, m_from)
        # normal points right: the path wraps the right side of its anchor,
        # so the crossing falls right of it: anchor at the left edge g
        return (g, g + 1) if nx > 0 else (g + 1, g)

    def _letter_variants(self, k):
        """Candidate (anchor_extension, new_trend, letters_consumed,
        letter_anchor_offsets) tuples for word position k, best first."""
        let = self.word[k]
        if let.index > 0:
            return self._b_variants(k, let.index, let.sign)
        return self._a_variants(k, let.sign)

    def _b_variants(self, k, i, sigma):
        m, R = self.anchors[-1]
        t = self.trend
        out = []
        if t == sigma:
            A = R + sigma
            for g in self._gap_lifts(i, m):
                for rank, e in enumerate(self._edge_pref(g, m, k)):
                    if _span_clean(self.n, m, e):
                        out.append(((abs(g + 0.5 - m), rank),
                                    ([(e, A)], sigma, 1, [0])))
        else:
            # U-turn: connector into the strip ahead, then re-cross the same
            # row.  Splitting the horizontal transfer between the two legs
            # keeps the passage inside the sqrt(5) budget.
            A = (R + t) + sigma
            seen = set()
            for g0 in self._gap_lifts(i, m):
                half = round((g0 + 0.5 - m) / 2.0)
                for d in (half, half + 1, half - 1, 1, -1):
                    w = m + d
                    if w == m or w in seen:
                        continue
                    if not _span_clean(self.n, m, w):
                        continue
                    seen.add(w)
                    for g in self._gap_lifts(i, w):
                        for rank, e in enumerate(self._edge_pref(g, w, k)):
                            if _span_clean(self.n, w, e):
                                cost = max(abs(w - m), abs(g + 0.5 - w))
                                out.append(((cost, rank),
                                            ([(w, R + t), (e, A)], sigma, 1, [1])))
        out.sort(key=lambda p: p[0])
        return [v for _, v in out]

    def _a_variants(self, k, sigma):
        m, R = self.anchors[-1]
        t = self.trend
        nxt = self.word[k + 1] if k + 1 < len(self.word) else None
        in_a_run = (k > 0 and self.word[k - 1].index == 0) or \
            (nxt is not None and nxt.index == 0)
        out = []
        prefixes = [([], m, R, t)]
        if m % self.n == 0:
            prefixes = [([(m + d, R + t)], m + d, R + t, -t)
                        for d in (-sigma, sigma)]
        for pre, m1, R1, t1 in prefixes:
            if nxt is not None and nxt.index > 0 and nxt.sign == t1:
                # land straight on the next letter's gap edge
                out.extend(self._into_arc_variants(pre, m1, R1, t1, sigma, nxt))
            u = m1 % self.n if sigma > 0 else (-m1) % self.n
            if nxt is not None and nxt.index > 0 and nxt.sign == -t1:
                # land just past the wall: the next gap is then at most one
                # cell away, keeping both adjacent passages short
                for v in (1, 2):
                    cc = m1 + sigma * ((self.n - u) + v)
                    if _count_interior_walls(self.n, m1, cc) == 1:
                        out.append((pre + [(cc, R1 + t1)], -t1, 1, [len(pre)]))
            # exact one-cell diagonal: consecutive wall letters then cost
            # exactly sqrt(2) crossing to crossing
            shifts = (0,) if in_a_run else (0, sigma, -sigma)
            for shift in shifts:
                cc = m1 + sigma * self.n + shift
                if _count_interior_walls(self.n, m1, cc) == 1:
                    out.append((pre + [(cc, R1 + t1)], -t1, 1, [len(pre)]))
            # last resort: flip the trend with a connector, then the diagonal
            if not in_a_run or len(out) == 0:
                for d in (1, -1):
                    w = m1 + d
                    cc = w + sigma * self.n
                    if _count_interior_walls(self.n, w, cc) == 1 and \
                            _span_clean(self.n, m1, w):
                        out.append((pre + [(w, R1 + t1), (cc, R1)],
                                    t1, 1, [len(pre) + 1]))
        return out

    def _into_arc_variants(self, pre, m, R, t, sigma, nxt):
        """The diagonal lands on the next letter's gap-edge disk: the chord
        carries the a-crossing mid-flight and the landing doubles as the arc
        visit for the b, so the climb continues without an extra turn."""
        n = self.n
        if sigma > 0:
            wall = (math.floor(m / n) + 1) * n
        else:
            wall = (math.ceil(m / n) - 1) * n
        cell0 = wall if sigma > 0 else wall - n
        g = cell0 + (nxt.index - 1)
        lo = max(0.04, 6.0 * self.table.r)
        out = []
        for e in self._edge_order(g, m):
            if _count_interior_walls(n, m, e) != 1:
                continue
            phi = (wall - m) / (e - m)
            if not (lo <= phi <= 1.0 - lo):
                continue
            ext = pre + [(e, R + t)]
            out.append((ext, t, 2, [len(pre), len(pre)]))
        return out

    def _apply(self, var, k):
        """Push one letter variant plus its trailing idle pairs."""
        ext, new_trend, consumed, offsets = var
        base = len(self.anchors)
        if (self.letter_anchor and self.letter_anchor[-1] == base - 1
                and base >= 2 and self.word[len(self.letter_anchor) - 1].index > 0
                and self._bad_wedge(self.anchors[-2], self.anchors[-1], ext[0])):
            raise RealizationError("variant would complete a flat wedge")
        for col, row in ext:
            self._push(col, row)
        self.trend = new_trend
        for off in offsets:
            self.letter_anchor.append(base + off)
        self._audit(final=False)
        self._probe_continuation()
        for _ in range(self._idles_due(k, consumed)):
            self._idle_pair()
        return consumed

    def _probe_continuation(self):
        """Fail fast if no plausible next anchor keeps the word consistent.

        The crossing next to the youngest anchor only becomes auditable one
        commit later; probing with synthetic continuations surfaces a wrong
        gap-edge choice at the frame that made it, where backtracking can
        still fix it cheaply.
        """
        m, R = self.anchors[-1]
        snap = self._snapshot()
        last_err = None
        h = max(2, self.n // 2)
        for d in (1, -1, 3, -3, h, -h, self.n - 1, 1 - self.n):
            cand = (m + d, R + self.trend)
            try:
                self._push(*cand)
                self._audit(final=False)
                self._restore(snap)
                return
            except RealizationError as exc:
                last_err = exc
                self._restore(snap)
        raise RealizationError(f"no viable continuation ({last_err})",
                               blame=getattr(last_err, "blame", None))

    def _idles_due(self, k, consumed):
        if self.idle_rate <= 0.0:
            return 0
        before = math.floor(k * self.idle_rate)
        after = math.floor((k + consumed) * self.idle_rate)
        return after - before

    def _idle_pair(self):
        """Back-and-forth bounce pair; crossings cancel in reduction."""
        m, R = self.anchors[-1]
        t = self.trend
        snap = self._snapshot()
        last_err = None
        for d in (1, -1):
            for back in ((m, R), (m + 2 * d, R)):
                try:
                    self._push(m + d, R + t)
                    self._push(*back)
                    self._audit(final=False)
                    self.idle_pairs += 1
                    return
                except RealizationError as exc:
                    last_err = exc
                    self._restore(snap)
        raise RealizationError(f"idle pair failed: {last_err}")

    def _apply_tail(self):
        """Two closing connectors so the last adjacent crossings realize."""
        snap = self._snapshot()
        last_err = None
        for d1 in (1, -1):
            for d2 in (1, -1):
                try:
                    m, R = self.anchors[-1]
                    self._push(m + d1, R + self.trend)
                    self._push(m + d1 + d2, R)
                    self._audit(final=True)
                    return
                except RealizationError as exc:
                    last_err = exc
                    self._restore(snap)
        raise RealizationError(f"tail failed: {last_err}")

    # -- driver

    def plan(self):
        if not self.word:
            raise RealizationError("empty word")
        first = self.word[0]
        self.trend = first.sign if first.index > 0 else 1
        self.anchors.append((self.n // 2, 0))

        frames = []  # (wpos, variant_iterator, snapshot)
        wpos = 0
        budget = 500 + 300 * len(self.word)
        it = iter(self._letter_variants(0))
        while True:
            snap = self._snapshot()
            advanced = False
            min_blame = None
            for var in it:
                budget -= 1
                if budget <= 0:
                    raise RealizationError("planner search budget exhausted")
                try:
                    consumed = self._apply(var, wpos)
                except RealizationError as exc:
                    if exc.blame is not None:
                        min_blame = exc.blame if min_blame is None \
                            else min(min_blame, exc.blame)
                    self._restore(snap)
                    continue
                frames.append((wpos, it, snap))
                wpos += consumed
                advanced = True
                break
            if advanced:
                if wpos >= len(self.word):
                    try:
                        self._apply_tail()
                        return self.anchors
                    except RealizationError:
                        wpos, it, snap = frames.pop()
                        self._restore(snap)
                        continue
                it = iter(self._letter_variants(wpos))
                continue
            if not frames:
                raise RealizationError(f"no realization found (stuck at letter {wpos})")
            # backjump to the earliest letter the failures blamed: retrying
            # everything in between cannot fix the conflict
            wpos, it, snap = frames.pop()
            self._restore(snap)


def _count_interior_walls(n, c1, c2):
    lo, hi = (c1, c2) if c1 <= c2 else (c2, c1)
    first = (math.floor(lo / n) + 1) * n
    if first >= hi:
        return 0
    last = (math.ceil(hi / n) - 1) * n
    return (last - first) // n + 1


def realize_word(table: BilliardTable, word: list[Letter],
                 idle_rate: float = 0.0) -> RealizedWord:
    """Build an admissible scatterer sequence whose orbit spells `word`.

    The word must be freely reduced and nonempty, indices within 1..n, and
    the table needs n >= 2 (a single scatterer column leaves no robust wall
    crossings to aim at).  idle_rate inserts that many back-and-forth bounce
    pairs per letter; their crossings cancel in reduction.

    The output is audited before returning: the designed polyline's crossing
    word must reduce to the target and the full sequence must pass the
    admissibility certificate.
    """
    if table.n < 2:
        raise ValueError("word realization needs n >= 2")
    if reduce_letters(word) != list(word):
        raise ValueError("target word must be freely reduced")
    for let in word:
        if let.index > table.n:
            raise ValueError(f"letter {let.text()} out of range for n={table.n}")
    if table.r >= 1.0 / (8.0 * table.n):
        raise ValueError(
            f"realization constructions need r < 1/(8n) = {1.0 / (8 * table.n):.6g} "
            f"for clearance, got r={table.r:.6g}")

    planner = _Planner(table, list(word), idle_rate)
    try:
        anchors = planner.plan()
    except RealizationError:
        # retry without the passage-time budget: correctness over speed
        planner = _Planner(table, list(word), idle_rate)
        planner.passage_budget = None
        anchors = planner.plan()
    disks = [disk_from_column(table, c, q) for c, q in anchors]
    pts = designed_points(table, anchors)
    letters, tie = polyline_letters(table, pts)
    if tie:
        raise RealizationError("designed polyline produced a wall tie")
    reduced = reduce_letters(letters)
    if reduced != list(word):
        raise RealizationError(
            "audit failed: designed polyline spells "
            f"{word_to_text(reduced)!r}, wanted {word_to_text(word)!r}")
    cert = check_sequence(table, disks)
    if not cert.admissible:
        bad_p = [i for i, ok in enumerate(cert.pair_ok) if not ok]
        bad_t = [i + 1 for i, ok in enumerate(cert.triple_ok) if not ok]
        raise RealizationError(
            f"audit failed: inadmissible pairs at {bad_p}, triples at {bad_t}")
    return RealizedWord(list(word), anchors, disks, pts, cert,
                        planner.idle_pairs, letters)
