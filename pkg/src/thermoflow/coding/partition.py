"""Markov partition of the cat-map suspension and its symbolic coding.

The torus is tiled by two boxes with sides along the eigendirections of
the golden frame (orthonormal (u, s) coordinates):

    box 0: [0, phi^2/N) x [0, 1/N)
    box 1: [0, phi/N)   x [1/N, 1/N + 1/(phi N)),   N = sqrt(phi + 2).

The lattice generated by the images of (1,0) and (0,1) tiles the plane by
this staircase, and the base map acts diagonally as (u, s) -> (lam u,
s/lam).  The image of each box decomposes into full-width unstable
crossings of boxes, so the preimage strips form a Markov partition; every
geometric fact is asserted numerically at build time.  Refinement by one
level subdivides in both the unstable and stable directions by a factor
lam > 2, so all diameters at least halve.

Suspension rectangles are base cells thickened over the full roof, and
itineraries step at section returns (tau increments are roof sums).  With
this coding the cells whose closure meets the base fixed point keep a
self-transition at every refinement level, so the open-face disjointness
diagnostic ``self_transition_cells`` is never empty; the partition reports
it rather than failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ChartError, DegenerateItineraryError
from ..sft import TransitionMatrix
from .suspension import FlowPoint, SuspensionSystem

__all__ = [
    "MarkovPartitionSpec",
    "Itinerary",
    "Crossing",
    "Cell",
    "build_cat_partition",
    "verify_markov_inclusions",
]

_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_N = math.sqrt(_PHI + 2.0)


@dataclass(frozen=True)
class Crossing:
    """One full unstable crossing of the image of a box over another box."""

    src_box: int
    tgt_box: int
    ell: tuple              # lattice vector subtracted after applying the map
    src_u: tuple            # preimage u-interval inside the source box
    tgt_s: tuple            # image s-band inside the target box


@dataclass(frozen=True)
class Cell:
    """A partition rectangle: a u-interval times an s-interval of a box."""

    index: int
    box: int
    u_lo: float
    u_hi: float
    s_lo: float
    s_hi: float
    strip: int              # level-0 strip (selects the crossing)

    @property
    def u_width(self):
        return self.u_hi - self.u_lo

    @property
    def s_width(self):
        return self.s_hi - self.s_lo

    @property
    def s_mid(self):
        return 0.5 * (self.s_lo + self.s_hi)

    @property
    def diameter(self):
        return math.hypot(self.u_width, self.s_width)


@dataclass(frozen=True)
class Itinerary:
    """Return times and rectangle labels along an orbit.

    ``degenerate`` flags corner hits that were resolved by the
    lowest-index tie-break; callers wanting a clean symbol history may
    perturb the starting point.
    """

    tau: np.ndarray         # length m+1, tau[0] = 0
    xi: tuple               # length m, 1-based cell symbols
    length: int
    degenerate: bool = False


class MarkovPartitionSpec:
    """Rectangles, transition matrix, and affine coding maps.

    Immutable after construction.  Cell symbols are 1-based, ordered by
    (box, u_lo, s_lo); ties in point location resolve to the lowest index.
    """

    def __init__(self, system: SuspensionSystem, refine_level: int,
                 boxes, crossings, cells, A: TransitionMatrix,
                 u_edges, s_edges, delta0: float, delta1: float,
                 delta2: float, eps_star: float):
        self.system = system
        self.refine_level = refine_level
        self.boxes = boxes
        self.crossings = tuple(crossings)
        self.cells = tuple(cells)
        self.A = A
        self.u_edges = tuple(np.asarray(e) for e in u_edges)
        self.s_edges = tuple(np.asarray(e) for e in s_edges)
        self.delta0, self.delta1, self.delta2 = delta0, delta1, delta2
        self.eps_star = eps_star
        self.lam = system.base.lam_u
        self._lattice_basis = np.stack(
            [system.base.to_eigen(np.array([1.0, 0.0])),
             system.base.to_eigen(np.array([0.0, 1.0]))], axis=1)

        self._cell_grid = {}
        for c in self.cells:
            ui = int(np.searchsorted(self.u_edges[c.box], c.u_lo + 1e-12)) - 1
            si = int(np.searchsorted(self.s_edges[c.box], c.s_lo + 1e-12)) - 1
            self._cell_grid[(c.box, ui, si)] = c.index
        self.cell_u_lo = np.array([c.u_lo for c in self.cells])
        self.cell_u_hi = np.array([c.u_hi for c in self.cells])
        self.cell_s_mid = np.array([c.s_mid for c in self.cells])
        self.cell_box = np.array([c.box for c in self.cells])
        self.cell_strip = np.array([c.strip for c in self.cells])
        self.strip_ell_u = np.array([cr.ell[0] for cr in self.crossings])
        self.strip_tgt = np.array([cr.tgt_box for cr in self.crossings])
        self.self_transition_cells = tuple(
            i + 1 for i in range(len(self.cells))
            if A.entries[i, i])

    # -- eigenplane bookkeeping ------------------------------------------

    def to_domain(self, xy) -> np.ndarray:
        """Torus point(s) to staircase (u, s) coordinates."""
        us = self.system.base.to_eigen(np.asarray(xy, dtype=float))
        return self._reduce(us)

    def from_domain(self, u, s) -> np.ndarray:
        xy = self.system.base.from_eigen(
            np.stack([np.asarray(u, float), np.asarray(s, float)], axis=-1))
        return np.mod(xy, 1.0)

    def _reduce(self, us) -> np.ndarray:
        us = np.atleast_2d(np.asarray(us, dtype=float))
        V = self._lattice_basis
        coef = us @ np.linalg.inv(V).T
        out = np.full(us.shape, np.nan)
        done = np.zeros(len(us), dtype=bool)
        for dm in range(-2, 3):
            for dn in range(-2, 3):
                if done.all():
                    break
                mn = np.floor(coef) + np.array([dm, dn], dtype=float)
                cand = us - mn @ V.T
                ok = ~done & self._in_staircase(cand)
                out[ok] = cand[ok]
                done |= ok
        if not done.all():
            raise ChartError("lattice reduction failed; point far from "
                             "the fundamental staircase")
        return out if us.shape[0] > 1 else out[0]

    def _in_staircase(self, us) -> np.ndarray:
        u, s = us[..., 0], us[..., 1]
        (a0, a1, c0, c1), (b0, b1, d0, d1) = self.boxes
        in0 = (u >= a0) & (u < a1) & (s >= c0) & (s < c1)
        in1 = (u >= b0) & (u < b1) & (s >= d0) & (s < d1)
        return in0 | in1

    # -- location ----------------------------------------------------------

    @staticmethod
    def _interval_index(edges, x, tol):
        idx = int(np.searchsorted(edges, x, side="right")) - 1
        idx = min(max(idx, 0), len(edges) - 2)
        near = False
        if abs(x - edges[idx]) < tol:
            near = True
            if idx > 0:
                idx -= 1          # boundary ties go to the lowest index
        elif abs(edges[idx + 1] - x) < tol:
            near = True
        return idx, near

    def locate_base(self, xy, tol: float = 1e-11):
        """Cell symbol (1-based) of a torus point and a degeneracy flag.

        The flag marks a corner hit: the point is within ``tol`` of both a
        u-edge and an s-edge, where the symbol assignment is arbitrary.
        """
        u, s = self.to_domain(xy)
        (_, _, c0, c1) = self.boxes[0]
        box = 0 if s < c1 else 1
        near_box_seam = abs(s - c1) < tol
        ui, near_u = self._interval_index(self.u_edges[box], u, tol)
        si, near_s = self._interval_index(self.s_edges[box], s, tol)
        idx = self._cell_grid[(box, ui, si)]
        return idx + 1, (near_u and (near_s or near_box_seam))

    def locate_base_batch(self, xys, tol: float = 1e-11):
        xys = np.asarray(xys, dtype=float)
        out = np.empty(len(xys), dtype=np.int64)
        degen = np.zeros(len(xys), dtype=bool)
        for i, xy in enumerate(xys):
            out[i], degen[i] = self.locate_base(xy, tol)
        return out, degen

    def locate(self, p: FlowPoint, tol: float = 1e-11):
        return self.locate_base(p.base_array, tol)

    # -- model segments -----------------------------------------------------

    def model_point(self, symbol: int, u: float) -> FlowPoint:
        """Point of the section model segment of a cell at u-coordinate u."""
        c = self.cells[symbol - 1]
        if not c.u_lo - 1e-9 <= u <= c.u_hi + 1e-9:
            raise ChartError(f"u={u} outside the model segment of cell "
                             f"{symbol}")
        xy = self.from_domain(u, c.s_mid)
        return FlowPoint((float(xy[0]), float(xy[1])), 0.0)

    def u_coordinate(self, p: FlowPoint) -> float:
        u, _ = self.to_domain(p.base_array)
        return float(u)

    def project_to_model(self, p: FlowPoint, symbol: int = None):
        """Projection along weak stable leaves onto a model segment.

        Returns (symbol, u, model point).  The u-coordinate is preserved
        because weak stable leaves are vertical in the (u, s) chart.
        """
        if symbol is None:
            symbol, _ = self.locate(p)
        u, _s = self.to_domain(p.base_array)
        return symbol, float(u), self.model_point(symbol, float(u))

    # -- dynamics on symbols -------------------------------------------------

    def itinerary(self, p: FlowPoint, m: int, tol: float = 1e-11,
                  verify: bool = False, strict: bool = False) -> Itinerary:
        """Return-time itinerary: tau[j+1]-tau[j] are successive roof
        values along the base orbit; xi[j] is the cell of the j-th return.

        Corner hits resolve to the lowest cell index and set the
        ``degenerate`` flag (raise instead when ``strict``); an error is
        raised only if the ties cannot produce an admissible word.
        """
        if m < 1:
            raise ValueError("need m >= 1")
        sys = self.system
        base = p.base_array
        tau = np.zeros(m + 1)
        xi = []
        degenerate = False
        r0 = float(sys.roof.eval(base))
        tau[1] = r0 - p.height if m >= 1 else 0.0
        cur = base
        for j in range(m):
            sym, degen = self.locate_base(cur, tol)
            if degen:
                if strict:
                    raise DegenerateItineraryError(
                        f"orbit point {j} hit a rectangle corner within "
                        f"{tol}; perturb the starting point")
                degenerate = True
            xi.append(sym)
            if j >= 1:
                tau[j + 1] = tau[j] + float(sys.roof.eval(cur))
            cur = sys.base.apply(cur)
        word = tuple(xi)
        from ..sft import is_admissible
        if not is_admissible(self.A, word):
            raise DegenerateItineraryError(
                "boundary ties produced an inadmissible word; perturb the "
                "starting point")
        if verify:
            for j in range(m):
                t_mid = 0.5 * (tau[j] + tau[j + 1])
                q = self.system.flow(p, t_mid)
                sym, _ = self.locate(q)
                if sym != word[j]:
                    raise DegenerateItineraryError(
                        f"containment check failed at step {j}")
        return Itinerary(tau, word, m, degenerate)

    def itinerary_batch(self, points, m: int, tol: float = 1e-11):
        """Vectorized itineraries for section points (height 0).

        Returns (xi array (n, m), tau array (n, m+1), degenerate mask);
        degenerate rows carry symbol 0 from the first corner hit on.
        """
        bases = np.asarray([p.base_array for p in points], dtype=float)
        heights = np.array([p.height for p in points])
        n = len(bases)
        xi = np.zeros((n, m), dtype=np.int64)
        tau = np.zeros((n, m + 1))
        degen = np.zeros(n, dtype=bool)
        cur = bases.copy()
        roofs = self.system.roof.eval(cur)
        tau[:, 1] = roofs - heights
        for j in range(m):
            syms, dg = self.locate_base_batch(cur, tol)
            degen |= dg
            xi[:, j] = np.where(degen, 0, syms)
            if j >= 1:
                tau[:, j + 1] = tau[:, j] + self.system.roof.eval(cur)
            cur = self.system.base.apply(cur)
        return xi, tau, degen

    def forward_u_affine(self, symbol: int):
        """The expanding affine u-map induced by one return from a cell:
        u -> lam * u - ell_u(strip of the cell)."""
        strip = self.cells[symbol - 1].strip
        return self.lam, float(self.strip_ell_u[strip])

    def decode(self, xi, tol: float = 1e-9):
        """The unique model-segment point whose itinerary starts with xi.

        Backward contraction through the inverse strip maps; the error
        radius is half the final cell width times lam^-(m-1).
        """
        from ..sft import is_admissible
        xi = tuple(int(s) for s in xi)
        if not is_admissible(self.A, xi):
            raise ValueError("inadmissible symbol word")
        m = len(xi)
        c_last = self.cells[xi[-1] - 1]
        u = 0.5 * (c_last.u_lo + c_last.u_hi)
        for t in range(m - 2, -1, -1):
            scale, ell = self.forward_u_affine(xi[t])
            u = (u + ell) / scale
        radius = 0.5 * c_last.u_width * self.lam ** (-(m - 1))
        c0 = self.cells[xi[0] - 1]
        if not (c0.u_lo - radius - tol <= u <= c0.u_hi + radius + tol):
            raise ChartError("decoded coordinate escaped the first cell")
        return self.model_point(xi[0], min(max(u, c0.u_lo), c0.u_hi)), radius

    def decode_batch(self, words: np.ndarray):
        """Vectorized decode; returns (u array, radius array)."""
        words = np.asarray(words, dtype=np.int64)
        n, m = words.shape
        last = words[:, -1] - 1
        u = 0.5 * (self.cell_u_lo[last] + self.cell_u_hi[last])
        for t in range(m - 2, -1, -1):
            strip = self.cell_strip[words[:, t] - 1]
            u = (u + self.strip_ell_u[strip]) / self.lam
        radius = (0.5 * (self.cell_u_hi[last] - self.cell_u_lo[last])
                  * self.lam ** (-(m - 1)))
        return u, radius

    def max_diameter(self) -> float:
        return max(c.diameter for c in self.cells)


def _box_geometry():
    A = _PHI ** 2 / _N
    B = _PHI / _N
    C = 1.0 / _N
    D = 1.0 / (_PHI * _N)
    boxes = ((0.0, A, 0.0, C), (0.0, B, C, C + D))
    return boxes


def _scan_crossings(lam: float, boxes, tol: float = 1e-10):
    """Decompose the image of each box into full unstable crossings."""
    v1 = np.array([_PHI, 1.0]) / _N
    v2 = np.array([1.0, -_PHI]) / _N
    crossings = []
    reach = int(math.ceil(lam * 2.5)) + 3
    for k, (u0, u1, s0, s1) in enumerate(boxes):
        iu = (lam * u0, lam * u1)
        is_ = (s0 / lam, s1 / lam)
        found = []
        for j, (bu0, bu1, bs0, bs1) in enumerate(boxes):
            for dm in range(-reach, reach + 1):
                for dn in range(-reach, reach + 1):
                    ell = dm * v1 + dn * v2
                    ou0 = max(iu[0], bu0 + ell[0])
                    ou1 = min(iu[1], bu1 + ell[0])
                    os0 = max(is_[0], bs0 + ell[1])
                    os1 = min(is_[1], bs1 + ell[1])
                    if ou1 - ou0 > tol and os1 - os0 > tol:
                        if not (abs(ou0 - (bu0 + ell[0])) < tol
                                and abs(ou1 - (bu1 + ell[0])) < tol):
                            raise ChartError(
                                "image strip does not cross a box fully; "
                                "the base matrix is outside the supported "
                                "family")
                        found.append(Crossing(
                            k, j, (float(ell[0]), float(ell[1])),
                            (ou0 / lam, ou1 / lam),
                            (float(os0 - ell[1]), float(os1 - ell[1]))))
        found.sort(key=lambda c: c.src_u[0])
        covered = u0
        for c in found:
            if abs(c.src_u[0] - covered) > tol:
                raise ChartError("gap in the crossing decomposition")
            covered = c.src_u[1]
        if abs(covered - u1) > tol:
            raise ChartError("crossing decomposition does not exhaust the "
                             "image strip")
        crossings.extend(found)
    return crossings


def _forward_intervals(boxes, crossings, lam, box, level):
    """u-intervals of the given box refined by forward words, with the
    level-0 strip index each interval sits in."""
    strips = [i for i, c in enumerate(crossings) if c.src_box == box]
    if level == 0:
        return [(crossings[i].src_u[0], crossings[i].src_u[1], i)
                for i in strips]
    out = []
    for i in strips:
        c = crossings[i]
        for (ta, tb, _tstrip) in _forward_intervals(
                boxes, crossings, lam, c.tgt_box, level - 1):
            out.append(((ta + c.ell[0]) / lam, (tb + c.ell[0]) / lam, i))
    out.sort()
    return out


def _backward_bands(boxes, crossings, lam, box, level):
    """s-intervals of the given box refined by backward words."""
    if level == 0:
        u0, u1, s0, s1 = boxes[box]
        return [(s0, s1)]
    out = []
    for c in crossings:
        if c.tgt_box != box:
            continue
        for (sa, sb) in _backward_bands(boxes, crossings, lam,
                                        c.src_box, level - 1):
            out.append((sa / lam - c.ell[1], sb / lam - c.ell[1]))
    out.sort()
    return out


def _assert_tiles(intervals, lo, hi, tol, what):
    cur = lo
    for a, b in intervals:
        if abs(a - cur) > tol:
            raise ChartError(f"{what}: gap at {cur} vs {a}")
        cur = b
    if abs(cur - hi) > tol:
        raise ChartError(f"{what}: ends at {cur}, expected {hi}")


def build_cat_partition(system: SuspensionSystem, refine_level: int = 0,
                        delta0: float = None) -> MarkovPartitionSpec:
    """The classical two-box Markov partition, refined.

    Verifies at build time: the source matrix belongs to the cat-map
    eigenframe family; every image strip decomposes into full unstable
    crossings; refined u-intervals and s-bands tile each box exactly; the
    transition matrix is mixing with log(spectral radius) equal to
    log(lam_u) within 1e-6.  If delta0 is given, the refinement level is
    raised until 8 * max base diameter < delta0; otherwise the delta radii
    are derived from the achieved diameters (8.5x / 17x / 34x).
    """
    base = system.base
    gold = np.array([_PHI, 1.0]) / math.hypot(_PHI, 1.0)
    if not np.allclose(base.e_u, gold, atol=1e-12):
        raise ValueError("classical two-box construction applies to the "
                         "cat-map eigenframe (matrices [[2,1],[1,1]]^k)")
    lam = base.lam_u
    boxes = _box_geometry()
    crossings = _scan_crossings(lam, boxes)

    if delta0 is not None:
        level = refine_level
        while True:
            diam0 = _max_diameter_at(boxes, crossings, lam, level)
            if 8.0 * diam0 < delta0 or level >= 8:
                break
            level += 1
        if 8.0 * _max_diameter_at(boxes, crossings, lam, level) >= delta0:
            raise ValueError(f"cannot reach diameters below delta0/8 = "
                             f"{delta0 / 8:.2e} within refinement cap")
        refine_level = level

    tol = 1e-9
    u_edges, s_edges, cells = [], [], []
    per_box_u, per_box_s = [], []
    for b in range(len(boxes)):
        fwd = _forward_intervals(boxes, crossings, lam, b, refine_level)
        bwd = _backward_bands(boxes, crossings, lam, b, refine_level)
        u0, u1, s0, s1 = boxes[b]
        _assert_tiles([(a, c) for a, c, _ in fwd], u0, u1, tol,
                      f"box {b} u-intervals")
        _assert_tiles(bwd, s0, s1, tol, f"box {b} s-bands")
        per_box_u.append(fwd)
        per_box_s.append(bwd)
        u_edges.append(np.array([a for a, _, _ in fwd] + [u1]))
        s_edges.append(np.array([a for a, _ in bwd] + [s1]))

    for b in range(len(boxes)):
        for (ua, ub, strip) in per_box_u[b]:
            for (sa, sb) in per_box_s[b]:
                cells.append((b, ua, ub, sa, sb, strip))
    cells.sort(key=lambda t: (t[0], t[1], t[3]))
    cell_objs = [Cell(i, b, ua, ub, sa, sb, strip)
                 for i, (b, ua, ub, sa, sb, strip) in enumerate(cells)]

    # transition matrix from exact image geometry
    n = len(cell_objs)
    entries = np.zeros((n, n), dtype=np.int8)
    grid = {}
    for c in cell_objs:
        ui = int(np.searchsorted(u_edges[c.box], c.u_lo + 1e-12)) - 1
        si = int(np.searchsorted(s_edges[c.box], c.s_lo + 1e-12)) - 1
        grid[(c.box, ui, si)] = c.index
    for c in cell_objs:
        cr = crossings[c.strip]
        tb = cr.tgt_box
        img_u = (lam * c.u_lo - cr.ell[0], lam * c.u_hi - cr.ell[0])
        img_s = (c.s_lo / lam - cr.ell[1], c.s_hi / lam - cr.ell[1])
        ue, se = u_edges[tb], s_edges[tb]
        ia = int(np.argmin(np.abs(ue - img_u[0])))
        ib = int(np.argmin(np.abs(ue - img_u[1])))
        if abs(ue[ia] - img_u[0]) > tol or abs(ue[ib] - img_u[1]) > tol:
            raise ChartError("cell image is not aligned with the target "
                             "u-partition")
        js = int(np.searchsorted(se, 0.5 * (img_s[0] + img_s[1]))) - 1
        if img_s[0] < se[js] - tol or img_s[1] > se[js + 1] + tol:
            raise ChartError("cell image spans more than one target s-band")
        for uu in range(ia, ib):
            entries[grid[(tb, uu, js)], c.index] = 1
    A = TransitionMatrix(entries)

    from ..sft import is_mixing
    from ..thermo import Potential, transfer_spectral_pressure
    if is_mixing(A, 32) is None:
        raise ChartError("partition transition matrix is not mixing")
    p0 = transfer_spectral_pressure(A, Potential.constant(A, 1, 0.0)).value
    if abs(p0 - math.log(lam)) > 1e-6:
        raise ChartError(f"entropy check failed: log sr(A) = {p0} vs "
                         f"log lam = {math.log(lam)}")

    maxdiam = max(c.diameter for c in cell_objs)
    if delta0 is None:
        delta0 = 8.5 * maxdiam
    d1, d2 = 2.0 * delta0, 4.0 * delta0
    eps_star = min(0.3, 0.9 * min(c.s_width for c in cell_objs))
    return MarkovPartitionSpec(system, refine_level, boxes, crossings,
                               cell_objs, A, u_edges, s_edges,
                               delta0, d1, d2, eps_star)


def _max_diameter_at(boxes, crossings, lam, level) -> float:
    worst = 0.0
    for b in range(len(boxes)):
        fwd = _forward_intervals(boxes, crossings, lam, b, level)
        bwd = _backward_bands(boxes, crossings, lam, b, level)
        uw = max(c - a for a, c, _ in fwd)
        sw = max(c - a for a, c in bwd)
        worst = max(worst, math.hypot(uw, sw))
    return worst


def verify_markov_inclusions(spec: MarkovPartitionSpec,
                             samples_per_pair: int = 8,
                             rng=None) -> float:
    """Check the stable/unstable Markov inclusions on every admissible
    transition, plus sampled points on the shared faces; returns the worst
    signed violation (nonpositive means every inclusion holds).

    Unstable: the image of a full unstable fiber of the source cell covers
    the target cell's unstable fiber.  Stable: the image of a stable fiber
    is contained in the target's stable fiber.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    lam = spec.lam
    worst = -math.inf
    pairs = np.argwhere(spec.A.entries == 1)
    for i2, i1 in pairs:
        c1, c2 = spec.cells[i1], spec.cells[i2]
        cr = spec.crossings[c1.strip]
        img_u = (lam * c1.u_lo - cr.ell[0], lam * c1.u_hi - cr.ell[0])
        worst = max(worst, img_u[0] - c2.u_lo, c2.u_hi - img_u[1])
        s_img = (c1.s_lo / lam - cr.ell[1], c1.s_hi / lam - cr.ell[1])
        worst = max(worst, c2.s_lo - s_img[0], s_img[1] - c2.s_hi)
        # sampled points of the image band pull back into the source cell
        for _ in range(samples_per_pair):
            u = rng.uniform(c2.u_lo, c2.u_hi)
            s = rng.uniform(s_img[0], s_img[1])
            u_pre = (u + cr.ell[0]) / lam
            s_pre = lam * (s + cr.ell[1])
            worst = max(worst, c1.u_lo - u_pre, u_pre - c1.u_hi,
                        c1.s_lo - s_pre, s_pre - c1.s_hi)
    return worst
