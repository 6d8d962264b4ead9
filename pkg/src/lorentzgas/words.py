"""Words in the free group on the crossing generators.

The fundamental group of the table is free on n+1 generators: one for the
vertical wall family (index 0, written ``a``) and one per horizontal wall gap
(indices 1..n, written ``b1``..``bn``).  A letter is a generator or its
inverse; a reduced word never contains an adjacent letter/inverse pair.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple


class Letter(NamedTuple):
    index: int   # 0 for the vertical-wall generator, 1..n for horizontal gaps
    sign: int    # +1 or -1

    @property
    def kind(self) -> str:
        return "A" if self.index == 0 else "B"

    def inverse(self) -> "Letter":
        return Letter(self.index, -self.sign)

    def text(self) -> str:
        if self.index == 0:
            return "a" if self.sign > 0 else "A"
        return f"b{self.index}" if self.sign > 0 else f"B{self.index}"


def reduce_letters(letters: Iterable[Letter]) -> list[Letter]:
    """Freely reduce a letter sequence (stack cancellation).

    Free reduction is confluent, so the result does not depend on the order
    cancellations are performed in.
    """
    out: list[Letter] = []
    for let in letters:
        if out and out[-1].index == let.index and out[-1].sign == -let.sign:
            out.pop()
        else:
            out.append(let)
    return out


def inverse_word(word: list[Letter]) -> list[Letter]:
    return [let.inverse() for let in reversed(word)]


def concat_reduce(w1: list[Letter], w2: list[Letter]) -> list[Letter]:
    """Product of two reduced words, reduced.

    Cancellation can only happen at the seam, so the cost is the cancelled
    length, not the full rescan.
    """
    out = list(w1)
    i = 0
    n2 = len(w2)
    while out and i < n2 and out[-1].index == w2[i].index and out[-1].sign == -w2[i].sign:
        out.pop()
        i += 1
    out.extend(w2[i:])
    return out


def word_to_text(word: Iterable[Letter]) -> str:
    return " ".join(let.text() for let in word)


_LETTER_RE = re.compile(r"^(a|A|b(\d+)|B(\d+))$")


def text_to_word(text: str, n: int | None = None) -> list[Letter]:
    """Parse the compact text form: lowercase positive, uppercase inverse."""
    word = []
    for tok in text.split():
        m = _LETTER_RE.match(tok)
        if not m:
            raise ValueError(f"bad letter token {tok!r}")
        if tok in ("a", "A"):
            let = Letter(0, 1 if tok == "a" else -1)
        else:
            idx = int(tok[1:])
            if idx < 1 or (n is not None and idx > n):
                raise ValueError(f"b-index {idx} out of range for n={n}")
            let = Letter(idx, 1 if tok[0] == "b" else -1)
        word.append(let)
    return word


def word_prefix(word: list[Letter], depth: int = 8) -> tuple[Letter, ...]:
    """Leading prefix of a reduced word, the desk-scale stand-in for the
    direction in which the word escapes to infinity."""
    return tuple(word[:depth])


@dataclass
class BlockDecomposition:
    """Alternating a/b block structure of a reduced word.

    The canonical form starts with an a-block and ends with a b-block; a
    leading b-block and a trailing a-block are truncated (and counted) so the
    counts (k, m, s) below always refer to the canonical core.
    """

    blocks: list[tuple[str, int]]      # canonical core, alternating ('A'|'B', length)
    k: int                             # a-letters in the core
    m: int                             # b-letters in the core
    s: int                             # number of a-blocks in the core
    dropped_leading: int               # letters removed from a leading b-block
    dropped_trailing: int              # letters removed from a trailing a-block

    @property
    def dropped(self) -> int:
        return self.dropped_leading + self.dropped_trailing


def block_decomposition(word: list[Letter]) -> BlockDecomposition:
    """Maximal-run block structure with canonical truncation.

    A block is a maximal run of letters of one kind; distinct b-generators
    (and mixed signs) may share one b-block.  After truncation the word has
    the shape (a-block b-block)^s, whence s <= min(k, m).
    """
    runs: list[tuple[str, int]] = []
    for let in word:
        if runs and runs[-1][0] == let.kind:
            runs[-1] = (let.kind, runs[-1][1] + 1)
        else:
            runs.append((let.kind, 1))

    dropped_leading = 0
    dropped_trailing = 0
    if runs and runs[0][0] == "B":
        dropped_leading = runs[0][1]
        runs = runs[1:]
    if runs and runs[-1][0] == "A":
        dropped_trailing = runs[-1][1]
        runs = runs[:-1]

    k = sum(length for kind, length in runs if kind == "A")
    m = sum(length for kind, length in runs if kind == "B")
    s = sum(1 for kind, _ in runs if kind == "A")
    return BlockDecomposition(runs, k, m, s, dropped_leading, dropped_trailing)
