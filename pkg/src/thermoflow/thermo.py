"""Topological pressure, the root of P(-rho*g) = 0, and Gibbs eigendata.

Potentials are locally constant of some depth k: g(xi) depends only on the
first k symbols, so it is a finite table over the admissible depth-k words.
Two routes to the pressure cross-validate each other:

* ``pressure_partition_sum``: the defining limit, evaluated exactly at a
  finite truncation depth by aggregating over all depth-(m+k-1) extensions;
* ``transfer_spectral_pressure``: log spectral radius of the weighted
  transition matrix on depth-k word states, which equals the pressure
  exactly for locally constant potentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (BracketError, BudgetExceededError, NonMixingError,
                     NotEventuallyPositiveError)
from .sft import TransitionMatrix, enumerate_words, is_mixing

__all__ = [
    "Potential",
    "PressureEstimate",
    "GibbsData",
    "pressure_partition_sum",
    "transfer_spectral_pressure",
    "pressure_root",
    "gibbs",
    "random_potential",
    "add_coboundary",
    "power_shift",
    "write_potential_csv",
    "read_potential_csv",
    "gibbs_to_json_dict",
]


@dataclass(frozen=True)
class Potential:
    """Depth-k locally constant potential: one value per admissible word.

    ``words`` is exactly ``enumerate_words(A, depth)`` in lexicographic
    order and ``values`` is aligned with it.
    """

    depth: int
    words: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if len(v) != len(self.words):
            raise ValueError("values not aligned with words")
        if not np.isfinite(v).all():
            raise ValueError("potential values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_index",
                           {w: i for i, w in enumerate(self.words)})

    @staticmethod
    def from_dict(A: TransitionMatrix, depth: int, table: dict) -> "Potential":
        words = tuple(enumerate_words(A, depth))
        if set(table) != set(words):
            raise ValueError("table must cover exactly the admissible "
                             f"depth-{depth} words")
        return Potential(depth, words, np.array([table[w] for w in words]))

    @staticmethod
    def constant(A: TransitionMatrix, depth: int, c: float) -> "Potential":
        words = tuple(enumerate_words(A, depth))
        return Potential(depth, words, np.full(len(words), float(c)))

    def value(self, word) -> float:
        """Value on the cylinder of ``word`` (uses the first ``depth``
        symbols; the word may be longer)."""
        return float(self.values[self._index[tuple(word[: self.depth])]])

    def as_dict(self) -> dict:
        return {w: float(v) for w, v in zip(self.words, self.values)}


@dataclass(frozen=True)
class PressureEstimate:
    """A pressure value plus how it was obtained.

    ``error_bound`` is a var-based tail bound for partition sums and the
    Collatz-Wielandt bracket half-width (relative eigenvalue residual, in
    log scale) for the spectral method.
    """

    value: float
    method: str
    m: Optional[int]
    error_bound: float

    def __post_init__(self):
        if self.error_bound < 0:
            raise ValueError("error_bound must be nonnegative")


class _StateGraph:
    """Depth-k word states with their one-step transitions."""

    def __init__(self, A: TransitionMatrix, depth: int):
        self.A = A
        self.depth = depth
        self.states = tuple(enumerate_words(A, depth))
        index = {w: i for i, w in enumerate(self.states)}
        src, dst = [], []
        for i, w in enumerate(self.states):
            for j in A.successors(w[-1]):
                w2 = w[1:] + (j,) if depth > 1 else (j,)
                i2 = index.get(w2)
                if i2 is not None:
                    src.append(i)
                    dst.append(i2)
        self.src = np.array(src, dtype=np.int64)
        self.dst = np.array(dst, dtype=np.int64)
        self.index = index

    def matvec(self, weights_src: np.ndarray, v: np.ndarray) -> np.ndarray:
        """(M v)[dst] = sum over edges of weights[src] * v[src]."""
        return np.bincount(self.dst, weights=weights_src[self.src] * v[self.src],
                           minlength=len(self.states))

    def matvec_T(self, weights_src: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.bincount(self.src, weights=weights_src[self.src] * v[self.dst],
                           minlength=len(self.states))


_GRAPH_CACHE: dict = {}


def _graph(A: TransitionMatrix, depth: int) -> _StateGraph:
    key = (A, depth)
    if key not in _GRAPH_CACHE:
        _GRAPH_CACHE[key] = _StateGraph(A, depth)
    return _GRAPH_CACHE[key]


def _require_mixing(A: TransitionMatrix, max_power: int = 64) -> int:
    m0 = is_mixing(A, max_power)
    if m0 is None:
        raise NonMixingError("transition matrix is not mixing (leading "
                             "eigenvalue may be non-simple)")
    return m0


def _power_iteration(graph: _StateGraph, weights: np.ndarray,
                     tol: float = 1e-12, max_iters: int = 200_000,
                     transpose: bool = False):
    """Leading eigenvalue and positive eigenvector of the weighted matrix.

    Deterministic all-ones start.  Collatz-Wielandt ratios give a rigorous
    two-sided bracket [lo, hi] for the eigenvalue at every step; iteration
    stops when the bracket is relatively tighter than ``tol``.
    """
    n = len(graph.states)
    v = np.ones(n)
    mv = graph.matvec_T(weights, v) if transpose else graph.matvec(weights, v)
    lo, hi = 0.0, math.inf
    for _ in range(max_iters):
        ratios = mv / v
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * lo:
            break
        v = mv / mv.max()
        mv = graph.matvec_T(weights, v) if transpose else graph.matvec(weights, v)
    lam = 0.5 * (lo + hi)
    return lam, lo, hi, v / v.sum()


def transfer_spectral_pressure(A: TransitionMatrix, g: Potential,
                               tol: float = 1e-12,
                               max_iters: int = 200_000) -> PressureEstimate:
    """log of the spectral radius of the weighted transition matrix.

    The matrix lives on depth-k word states; the weight of the transition
    w -> w' is exp(g(w)), g evaluated on the source cylinder.  For locally
    constant g this equals the pressure exactly.
    """
    _require_mixing(A)
    graph = _graph(A, g.depth)
    weights = np.exp(g.values)
    lam, lo, hi, _ = _power_iteration(graph, weights, tol, max_iters)
    err = 0.5 * (math.log(hi) - math.log(lo)) if lo > 0 else math.inf
    return PressureEstimate(math.log(lam), "spectral", None, err)


def _log_partition_sums(A: TransitionMatrix, g: Potential, m: int,
                        budget: int):
    """log Z_j for j in {m-3,...,m} (those with j >= depth).

    Z_j sums, over the admissible depth-j words, the exponential of the
    exact supremum of the j-step Birkhoff sum on each cylinder.  The sup is
    taken over all depth-(j+k-1) extensions; it splits into the part
    determined by the word plus a max over the last k-1 extension symbols,
    so it aggregates exactly over paths of depth-k states.
    """
    k = g.depth
    if m < k:
        raise ValueError(f"need m >= potential depth ({k}); got {m}")
    graph = _graph(A, k)
    n = len(graph.states)
    if (len(graph.src) + n) * max(m, 1) > budget:
        raise BudgetExceededError(
            f"partition sum at m={m} needs ~{(len(graph.src) + n) * m} edge "
            f"operations, over budget {budget}")
    gv = g.values

    # tail[s] = max over admissible (k-1)-symbol continuations of the sum of
    # g over the continuation states
    tail = np.zeros(n)
    for _ in range(k - 1):
        new = np.full(n, -np.inf)
        np.maximum.at(new, graph.src, gv[graph.dst] + tail[graph.dst])
        tail = new
    etail = np.exp(tail - tail.max())
    tail_scale = tail.max()

    out = {}
    v = np.exp(gv - gv.max())
    logscale = gv.max()
    for r in range(0, m - k + 1):
        j = r + k
        if m - 3 <= j <= m:
            out[j] = math.log(float(v @ etail)) + logscale + tail_scale
        if r < m - k:
            v = graph.matvec(np.exp(gv - gv.max()), v)
            logscale += gv.max()
            mx = v.max()
            v /= mx
            logscale += math.log(mx)
    return out


def pressure_partition_sum(A: TransitionMatrix, g: Potential, m: int,
                           budget: int = 50_000_000) -> PressureEstimate:
    """(1/m) log of the depth-m partition sum, with a convergence bound.

    The estimate is an upper bound of the limit (the log partition sums are
    subadditive).  The error bound combines the gap between the estimate and
    the one-step ratio log(Z_m/Z_{m-1}) with the observed geometric decay of
    the ratio differences.
    """
    b = _log_partition_sums(A, g, m, budget)
    v_m = b[m] / m
    if m - 3 in b or m - 2 in b:
        r_m = b[m] - b[m - 1]
        have3 = (m - 3) in b
        r_m1 = b[m - 1] - b[m - 2] if (m - 2) in b else r_m
        d1 = abs(r_m - r_m1)
        if have3:
            r_m2 = b[m - 2] - b[m - 3]
            d2 = abs(r_m1 - r_m2)
            theta = min(d1 / d2, 0.97) if d2 > 1e-300 else 0.75
        else:
            theta = 0.75
        tail = 2.0 * d1 * theta / (1.0 - theta)
        bound = max(v_m - r_m, 0.0) + tail + 1e-12
    else:
        # m too close to the potential depth for ratio data; coarse bound
        osc = float(g.values.max() - g.values.min())
        bound = (math.log(len(_graph(A, g.depth).states)) + (g.depth - 1) * osc
                 ) / m + 1e-12
    return PressureEstimate(v_m, "partition_sum", m, bound)


def _birkhoff_extrema(A: TransitionMatrix, g: Potential, m: int):
    """(inf, sup) over the shift space of the m-step Birkhoff sum of g."""
    graph = _graph(A, g.depth)
    n = len(graph.states)
    gv = g.values
    lo = gv.copy()
    hi = gv.copy()
    for _ in range(m - 1):
        nlo = np.full(n, np.inf)
        nhi = np.full(n, -np.inf)
        np.minimum.at(nlo, graph.src, lo[graph.dst])
        np.maximum.at(nhi, graph.src, hi[graph.dst])
        lo, hi = gv + nlo, gv + nhi
    return float(lo.min()), float(hi.max())


def pressure_root(A: TransitionMatrix, g: Potential, p_tol: float = 1e-10,
                  m_budget: int = 24, max_bisect: int = 200,
                  full_output: bool = False):
    """The positive rho with P(-rho*g) = 0, by bisection.

    Requires the Birkhoff sums of g to become uniformly positive at some
    depth m <= m_budget (checked by exact min-plus aggregation).  The
    initial bracket [m*P(0)/sup_m, m*P(0)/inf_m] comes from the two-sided
    Lipschitz bound of the pressure; monotonicity of rho -> P(-rho*g) is
    verified on a sample grid.
    """
    _require_mixing(A)
    m_pos, c_lo, c_hi = None, None, None
    for m in range(1, m_budget + 1):
        c_lo, c_hi = _birkhoff_extrema(A, g, m)
        if c_lo > 0:
            m_pos = m
            break
    if m_pos is None:
        raise NotEventuallyPositiveError(
            f"inf of the m-step Birkhoff sums stayed <= 0 for m <= {m_budget}")

    def P(rho: float) -> float:
        scaled = Potential(g.depth, g.words, -rho * g.values)
        return transfer_spectral_pressure(A, scaled).value

    p0 = P(0.0)
    if p0 <= 0:
        raise BracketError("P(0) must be positive (mixing matrix with more "
                           "than one admissible orbit)")
    rho_lo = m_pos * p0 / c_hi
    rho_hi = m_pos * p0 / c_lo
    f_lo, f_hi = P(rho_lo), P(rho_hi)
    # widen a touch if rounding put the bracket off the sign change
    tries = 0
    while f_lo < 0 and tries < 8:
        rho_lo *= 0.5
        f_lo = P(rho_lo)
        tries += 1
    while f_hi > 0 and tries < 16:
        rho_hi *= 2.0
        f_hi = P(rho_hi)
        tries += 1
    if f_lo < 0 or f_hi > 0:
        raise BracketError("could not bracket the pressure root")

    samples = np.linspace(rho_lo, rho_hi, 5)
    vals = [P(r) for r in samples]
    if any(b - a >= 1e-13 for a, b in zip(vals, vals[1:])):
        raise BracketError("rho -> P(-rho*g) is not strictly decreasing on "
                           "the bracket")

    lo, hi = rho_lo, rho_hi
    rho = 0.5 * (lo + hi)
    for _ in range(max_bisect):
        rho = 0.5 * (lo + hi)
        val = P(rho)
        if abs(val) <= p_tol and (hi - lo) <= 1e-12 * max(1.0, rho):
            break
        if val > 0:
            lo = rho
        else:
            hi = rho
    else:
        if abs(P(rho)) > p_tol:
            raise BracketError(f"bisection did not reach |P| <= {p_tol}")
    if full_output:
        return rho, {"m": m_pos, "bracket": (rho_lo, rho_hi),
                     "birkhoff_inf": c_lo, "birkhoff_sup": c_hi}
    return rho


@dataclass(frozen=True)
class GibbsData:
    """Pressure, eigenfunction table, and cylinder masses.

    ``h`` is a strictly positive table over the depth-k words.  ``mu`` maps
    words of every depth from 1 up to ``depth`` to cylinder masses; at each
    depth the masses sum to 1, and the mass of a word equals the sum over
    its admissible one-symbol extensions.
    """

    pressure: float
    depth: int
    potential_depth: int
    h: dict
    mu: dict

    def mu_at_depth(self, d: int) -> dict:
        return {w: v for w, v in self.mu.items() if len(w) == d}

    def h_value(self, word) -> float:
        return self.h[tuple(word[: self.potential_depth])]


def gibbs(A: TransitionMatrix, g: Potential, depth: int,
          tol: float = 1e-12, max_iters: int = 200_000) -> GibbsData:
    """Gibbs eigendata of the transfer matrix for a mixing SFT.

    The left eigenvector gives the cylinder masses of the eigenmeasure mu
    (normalized to mu(whole space) = 1), the right eigenvector the positive
    eigenfunction h (normalized to mu(h) = 1).  Masses at depths beyond the
    potential depth follow the cylinder recursion
    mu([i w]) = exp(g(i w) - P) * mu([w]).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    _require_mixing(A)
    k = g.depth
    graph = _graph(A, k)
    weights = np.exp(g.values)
    lam, lo, hi, right = _power_iteration(graph, weights, tol, max_iters)
    _, _, _, left = _power_iteration(graph, weights, tol, max_iters,
                                     transpose=True)
    P = math.log(lam)

    base = left / left.sum()                    # depth-k cylinder masses
    hvec = right / float(base @ right)          # so that sum(base * h) = 1
    h = {w: float(x) for w, x in zip(graph.states, hvec)}

    mu_k = {w: float(x) for w, x in zip(graph.states, base)}
    mu = {}
    for d in range(1, min(depth, k) + 1):       # shallow depths by prefix sums
        for w, x in mu_k.items():
            mu[w[:d]] = mu.get(w[:d], 0.0) + x
    if depth > k:
        prev = mu_k
        for d in range(k + 1, depth + 1):       # conformal recursion upward
            nxt = {}
            for w, mass in prev.items():
                for i in range(1, A.size + 1):
                    if A.allows(i, w[0]):
                        iw = (i,) + w
                        nxt[iw] = math.exp(g.value(iw) - P) * mass
            mu.update(nxt)
            prev = nxt
    return GibbsData(P, depth, k, h, mu)


def random_potential(A: TransitionMatrix, depth: int, rng,
                     scale: float = 1.0) -> Potential:
    words = tuple(enumerate_words(A, depth))
    return Potential(depth, words,
                     rng.uniform(-scale, scale, size=len(words)))


def add_coboundary(A: TransitionMatrix, g: Potential, phi: dict) -> Potential:
    """g + phi(shifted word) - phi(word head), phi a depth-(k-1) table.

    Adding such a coboundary leaves the pressure (and any pressure root)
    unchanged.
    """
    if g.depth < 2:
        raise ValueError("coboundary tables need potential depth >= 2")
    vals = np.array([
        v + phi[w[1:]] - phi[w[:-1]]
        for w, v in zip(g.words, g.values)
    ])
    return Potential(g.depth, g.words, vals)


def power_shift(A: TransitionMatrix, g: Potential, m: int):
    """The m-step shift as an SFT over depth-m blocks, with the Birkhoff
    m-sum of g as a depth-2 block potential.

    Returns (block matrix, block potential, block list).  The pressure of
    the block potential equals m times the pressure of g.
    """
    if m < max(2, g.depth - 1):
        raise ValueError("need m >= 2 and m >= depth-1 so the m-sum is "
                         "depth-2 in blocks")
    blocks = tuple(enumerate_words(A, m))
    nb = len(blocks)
    entries = np.zeros((nb, nb), dtype=np.int8)
    for jb, b in enumerate(blocks):
        for ib, b2 in enumerate(blocks):
            if A.allows(b[-1], b2[0]):
                entries[ib, jb] = 1
    A_m = TransitionMatrix(entries)
    bindex = {b: i + 1 for i, b in enumerate(blocks)}
    table = {}
    for b in blocks:
        for b2 in blocks:
            if not A.allows(b[-1], b2[0]):
                continue
            concat = b + b2
            s = sum(g.value(concat[j: j + g.depth]) for j in range(m))
            table[(bindex[b], bindex[b2])] = s
    g_m = Potential.from_dict(A_m, 2, table)
    return A_m, g_m, blocks


def _word_key(word) -> str:
    return "-".join(str(s) for s in word)


def _parse_word_key(key: str) -> tuple:
    return tuple(int(tok) for tok in key.split("-"))


def write_potential_csv(g: Potential, path) -> None:
    """CSV rows ``word,value`` with words dash-joined, e.g. ``1-2-1``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("word,value\n")
        for w, v in zip(g.words, g.values):
            fh.write(f"{_word_key(w)},{v!r}\n")


def read_potential_csv(A: TransitionMatrix, depth: int, path) -> Potential:
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("word"):
            raise ValueError(f"{path}: expected 'word,value' header")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, val = line.split(",")
            table[_parse_word_key(key)] = float(val)
    return Potential.from_dict(A, depth, table)


def gibbs_to_json_dict(gd: GibbsData) -> dict:
    return {
        "pressure": gd.pressure,
        "depth": gd.depth,
        "potential_depth": gd.potential_depth,
        "h": {_word_key(w): v for w, v in sorted(gd.h.items())},
        "mu": {_word_key(w): v for w, v in sorted(gd.mu.items())},
    }
