"""One-sided subshifts of finite type: combinatorics and metric geometry.

Transition convention
---------------------
The 0/1 matrix ``a`` is indexed as ``a[i][j] = 1`` meaning the transition
"current symbol j, next symbol i" is allowed.  A word ``(s0, s1, ..., sm)``
is admissible iff ``a[s(t+1)][s(t)] = 1`` for every consecutive pair.  This
is the (next, current) convention; most textbooks use the transpose.

Symbols are 1-based in every public interface (words, CSV files, tables);
0-based indices appear only in internal array arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetExceededError

__all__ = [
    "TransitionMatrix",
    "Word",
    "Cylinder",
    "SequenceDistance",
    "is_mixing",
    "enumerate_words",
    "is_admissible",
    "shift",
    "d_sigma",
    "full_shift",
    "golden_mean",
    "read_transition_matrix",
    "write_words_csv",
]


class TransitionMatrix:
    """A 0/1 transition matrix with no dead symbols.

    Every row and every column must contain at least one 1, so every symbol
    has a predecessor and a successor and every admissible word extends to
    an infinite admissible sequence.
    """

    def __init__(self, entries):
        a = np.asarray(entries, dtype=np.int8)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("transition matrix must be square")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("transition matrix entries must be 0 or 1")
        if (a.sum(axis=1) == 0).any() or (a.sum(axis=0) == 0).any():
            raise ValueError("every row and column needs at least one 1 "
                             "(no dead symbols)")
        a.setflags(write=False)
        self._a = a
        self.size = a.shape[0]
        # successors[j] = sorted 0-based symbols reachable from j
        self._succ = tuple(tuple(int(i) for i in np.nonzero(a[:, j])[0])
                           for j in range(self.size))

    @property
    def entries(self) -> np.ndarray:
        return self._a

    def allows(self, current: int, nxt: int) -> bool:
        """Whether the 1-based transition current -> nxt is admissible."""
        return bool(self._a[nxt - 1, current - 1])

    def successors(self, symbol: int) -> tuple:
        """1-based successors of a 1-based symbol."""
        return tuple(s + 1 for s in self._succ[symbol - 1])

    def __eq__(self, other):
        return isinstance(other, TransitionMatrix) and np.array_equal(
            self._a, other._a)

    def __hash__(self):
        return hash(self._a.tobytes())

    def __repr__(self):
        return f"TransitionMatrix(size={self.size})"


@dataclass(frozen=True)
class Word:
    """A finite symbol sequence with its admissibility flag."""

    symbols: tuple
    admissible: bool

    @staticmethod
    def make(A: TransitionMatrix, symbols: Sequence[int]) -> "Word":
        symbols = tuple(int(s) for s in symbols)
        return Word(symbols, is_admissible(A, symbols))

    def __len__(self):
        return len(self.symbols)


@dataclass(frozen=True)
class Cylinder:
    """The set of sequences starting with ``word``; depth is its length."""

    word: tuple

    @property
    def depth(self) -> int:
        return len(self.word)

    def is_nonempty(self, A: TransitionMatrix) -> bool:
        """Nonempty iff the word is admissible and extends to infinity."""
        if not is_admissible(A, self.word):
            return False
        return self.word[-1] - 1 in _surviving_symbols(A)


def is_admissible(A: TransitionMatrix, symbols: Sequence[int]) -> bool:
    """Check a[s(t+1)][s(t)] = 1 for all consecutive positions."""
    a = A.entries
    for cur, nxt in zip(symbols, symbols[1:]):
        if not (1 <= cur <= A.size and 1 <= nxt <= A.size):
            return False
        if not a[nxt - 1, cur - 1]:
            return False
    if len(symbols) == 1:
        s = symbols[0]
        return 1 <= s <= A.size
    return len(symbols) > 0


def _surviving_symbols(A: TransitionMatrix) -> frozenset:
    """0-based symbols from which an infinite forward path exists.

    Iteratively prunes symbols without a successor in the current set.  With
    the no-dead-symbol invariant this is all symbols, but the computation is
    kept so enumeration stays correct for any future relaxation.
    """
    alive = set(range(A.size))
    changed = True
    while changed:
        changed = False
        for j in list(alive):
            if not any(i in alive for i in A._succ[j]):
                alive.discard(j)
                changed = True
    return frozenset(alive)


def is_mixing(A: TransitionMatrix, max_power: int = 64) -> Optional[int]:
    """Smallest m0 <= max_power with A^m0 entrywise positive, else None.

    Uses boolean matrix powers, so there is no integer overflow for any
    max_power.
    """
    P = A.entries.astype(bool)
    step = A.entries.astype(bool)
    for m in range(1, max_power + 1):
        if P.all():
            return m if m > 1 else 1
        if m == max_power:
            break
        P = (P.astype(np.uint8) @ step.astype(np.uint8)) > 0
    return None


def enumerate_words(A: TransitionMatrix, m: int,
                    budget: int = 5_000_000) -> list:
    """All admissible length-m words that extend to infinite sequences.

    Returned in lexicographic order as tuples of 1-based symbols.  When every
    admissible word extends (always, under the no-dead-symbol invariant) the
    count equals the total of the entries of A^(m-1).
    """
    if m < 1:
        raise ValueError("word depth m must be >= 1 (the empty word is "
                         "unsupported)")
    alive = _surviving_symbols(A)
    succ = [tuple(i for i in A._succ[j] if i in alive) for j in range(A.size)]
    # count first so the budget check precedes any large allocation
    counts = np.ones(A.size, dtype=float)
    counts[[j for j in range(A.size) if j not in alive]] = 0.0
    total = counts.sum()
    for _ in range(m - 1):
        nxt = np.zeros(A.size, dtype=float)
        for j in range(A.size):
            if counts[j]:
                for i in succ[j]:
                    nxt[i] += counts[j]
        counts = nxt
        total = counts.sum()
    if total > budget:
        raise BudgetExceededError(
            f"enumeration of ~{int(total)} words exceeds budget {budget}")

    words = []
    stack = [(j,) for j in sorted(alive, reverse=True)]
    while stack:
        w = stack.pop()
        if len(w) == m:
            words.append(tuple(s + 1 for s in w))
            continue
        for i in reversed(succ[w[-1]]):
            stack.append(w + (i,))
    return words


def shift(w) -> "Word | tuple":
    """Drop the first symbol.  Accepts a Word or a plain tuple."""
    symbols = w.symbols if isinstance(w, Word) else tuple(w)
    if len(symbols) < 2:
        raise ValueError("shift needs a word of length >= 2")
    if isinstance(w, Word):
        # a sub-word of an admissible word stays admissible
        return Word(symbols[1:], w.admissible)
    return symbols[1:]


@dataclass(frozen=True)
class SequenceDistance:
    """Distance between two truncated sequences.

    ``exact`` is True when a disagreement was found inside the compared
    range; otherwise ``value`` is 0 and ``upper_bound`` = exp(-compared
    depth) bounds the distance between any two extensions.
    """

    value: float
    exact: bool
    upper_bound: float

    def __float__(self):
        return self.value


def d_sigma(x: Sequence[int], y: Sequence[int]) -> SequenceDistance:
    """exp(-m) where m is the first index at which the sequences disagree.

    Equal sequences (on the compared range) give 0.  The exponent carries a
    minus sign so that agreement on a long prefix means small distance and
    the metric generates the product topology.
    """
    xs = x.symbols if isinstance(x, Word) else tuple(x)
    ys = y.symbols if isinstance(y, Word) else tuple(y)
    n = min(len(xs), len(ys))
    for m in range(n):
        if xs[m] != ys[m]:
            v = math.exp(-m)
            return SequenceDistance(v, True, v)
    return SequenceDistance(0.0, False, math.exp(-n))


def full_shift(k: int) -> TransitionMatrix:
    """The full k-shift (all transitions allowed)."""
    return TransitionMatrix(np.ones((k, k), dtype=np.int8))


def golden_mean() -> TransitionMatrix:
    """The golden-mean shift: rows (1,1),(1,0); the word '2 then 2' is
    forbidden (from symbol 2 only symbol 1 may follow)."""
    return TransitionMatrix([[1, 1], [1, 0]])


def read_transition_matrix(path) -> TransitionMatrix:
    """Plain-text format: first line k_star, then k_star rows of 0/1."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty transition-matrix file")
    k = int(lines[0])
    rows = [[int(tok) for tok in ln.split()] for ln in lines[1:1 + k]]
    if len(rows) != k or any(len(r) != k for r in rows):
        raise ValueError(f"{path}: expected {k} rows of {k} entries")
    return TransitionMatrix(rows)


def write_words_csv(words, path) -> None:
    """One word per line, symbols comma-separated, 1-based."""
    with open(path, "w", encoding="utf-8") as fh:
        for w in words:
            symbols = w.symbols if isinstance(w, Word) else w
            fh.write(",".join(str(s) for s in symbols) + "\n")
