"""The concrete flow: a suspension of a hyperbolic toral automorphism.

Points are pairs (base, height) with base on the torus and height s in
[0, r(base)); the flow moves at unit speed in s and applies the base map
at the roof, (x, r(x)) ~ (Bx, 0).

Stable and unstable structure is explicit.  Base stable leaves are lines
in the e_s direction; for a point (x, s) the strong stable set consists of
(y, s - chi(x, y)) with y on the base stable leaf of x and

    chi(x, y) = sum_{n >= 0} [r(B^n x) - r(B^n y)],

which converges geometrically.  The weak stable leaf is the same set with
arbitrary heights.

The flow-box metric weights the unstable (resp. stable) direction by
lam_u^{s/r(x)} (resp. the inverse), so transverse expansion accrues
continuously: over a flow segment it equals log(lam_u) times the fraction
of roof traversed.  An optional conformal factor exp(psi) adds a boundary
term psi(endpoint) - psi(start) to each one-dimensional log-determinant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ChartError, QuadratureError
from .functions import ConformalWeight, FlowObservable, RoofFunction
from .torus import ToralAutomorphism, cat_map

__all__ = [
    "FlowPoint",
    "SuspensionSystem",
    "DefectResult",
    "CocycleValues",
    "PropertyAReport",
    "NaturalExpansionRate",
    "default_system",
]


@dataclass(frozen=True)
class FlowPoint:
    """A point of the suspension space in canonical coordinates."""

    base: tuple
    height: float

    @property
    def base_array(self) -> np.ndarray:
        return np.array(self.base, dtype=float)

    def __repr__(self):
        return (f"FlowPoint(({self.base[0]:.6f}, {self.base[1]:.6f}), "
                f"s={self.height:.6f})")


@dataclass(frozen=True)
class DefectResult:
    """Value of the asymptotic integral defect plus its error budget."""

    value: float
    error_bound: float
    alignment: float
    truncation: float

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class CocycleValues:
    stable: float        # log-determinant along the leafwise normal
    transverse: float    # log-determinant of the transverse holonomy
    norm: float          # log operator norm of the leafwise normal


@dataclass(frozen=True)
class PropertyAReport:
    horizon: float
    epsilon: float
    expansion_floor: float       # inf of min(transverse, -norm)
    combination_sup: float       # sup of |rho*stable + transverse|
    holds: bool
    samples: int


class _OrbitTable:
    """Crossing schedule of one orbit, for vectorized evaluation.

    Segment j covers times [starts[j], starts[j+1]) with base ``bases[j]``;
    the point at time t is (bases[j], t - starts[j]).  Time 0 lies in the
    segment of the initial point.
    """

    def __init__(self, sys, p: FlowPoint, t_lo: float, t_hi: float):
        base0 = p.base_array
        r0 = float(sys.roof.eval(base0))
        starts = [-p.height]
        bases = [base0]
        # forward
        while starts[-1] + float(sys.roof.eval(bases[-1])) < t_hi:
            starts.append(starts[-1] + float(sys.roof.eval(bases[-1])))
            bases.append(sys.base.apply(bases[-1]))
        # backward
        head_starts, head_bases = [], []
        cur_t, cur_b = starts[0], bases[0]
        while cur_t > t_lo:
            cur_b = sys.base.apply_inverse(cur_b)
            cur_t = cur_t - float(sys.roof.eval(cur_b))
            head_starts.append(cur_t)
            head_bases.append(cur_b)
        self.starts = np.array(head_starts[::-1] + starts)
        self.bases = np.array(head_bases[::-1] + bases)
        self.roofs = sys.roof.eval(self.bases)
        self.t_lo, self.t_hi = t_lo, t_hi
        self._r0 = r0

    def locate(self, ts):
        ts = np.asarray(ts, dtype=float)
        j = np.searchsorted(self.starts, ts, side="right") - 1
        j = np.clip(j, 0, len(self.starts) - 1)
        return j, ts - self.starts[j]

    def points(self, ts):
        j, heights = self.locate(ts)
        return self.bases[j], heights, self.roofs[j]

    def crossings_in(self, a: float, b: float) -> np.ndarray:
        s = self.starts
        return s[(s > a) & (s < b)]

    def fraction(self, t: float) -> float:
        """Roof-fraction odometer at time t, relative to segment indexing."""
        j, h = self.locate(np.array([t]))
        return float(j[0] + h[0] / self.roofs[j[0]])


def _adaptive_simpson(evalf, a: float, b: float, tol: float,
                      max_levels: int = 14):
    """Composite Simpson with doubling until the Richardson defect is
    within tolerance.  Returns (value, error_estimate)."""
    if b <= a:
        return 0.0, 0.0
    n = 8
    ts = np.linspace(a, b, n + 1)
    vals = evalf(ts)
    h = (b - a) / n
    prev = (h / 3.0) * (vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum()
                        + 2.0 * vals[2:-2:2].sum())
    cur, err = prev, math.inf
    for _ in range(max_levels):
        n *= 2
        ts = np.linspace(a, b, n + 1)
        vals = evalf(ts)
        h = (b - a) / n
        cur = (h / 3.0) * (vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum()
                           + 2.0 * vals[2:-2:2].sum())
        err = abs(cur - prev) / 15.0
        if err <= tol:
            return cur + (cur - prev) / 15.0, err
        prev = cur
    return cur, err


@dataclass(frozen=True)
class SuspensionSystem:
    """Suspension flow of a hyperbolic toral automorphism.

    Immutable; all evaluations are pure functions of (point, time).
    """

    base: ToralAutomorphism
    roof: RoofFunction
    weight: ConformalWeight = field(default_factory=ConformalWeight)

    # -- points -----------------------------------------------------------

    def point(self, x: float, y: float, s: float = 0.0) -> FlowPoint:
        base = np.mod(np.array([x, y], dtype=float), 1.0)
        r = float(self.roof.eval(base))
        if not 0.0 <= s < r:
            raise ValueError(f"height {s} outside [0, {r})")
        return FlowPoint((float(base[0]), float(base[1])), float(s))

    def random_point(self, rng) -> FlowPoint:
        x, y, v = rng.uniform(0.0, 1.0, size=3)
        base = np.array([x, y])
        return FlowPoint((float(x), float(y)),
                         float(v * 0.999 * float(self.roof.eval(base))))

    def flow(self, p: FlowPoint, t: float) -> FlowPoint:
        """Phi^t(p), crossing the roof as needed (t of either sign)."""
        base = p.base_array
        s = p.height + t
        r = float(self.roof.eval(base))
        while s >= r:
            s -= r
            base = self.base.apply(base)
            r = float(self.roof.eval(base))
        while s < 0.0:
            base = self.base.apply_inverse(base)
            r = float(self.roof.eval(base))
            s += r
        return FlowPoint((float(base[0]), float(base[1])), float(s))

    def orbit_table(self, p: FlowPoint, t_lo: float, t_hi: float):
        return _OrbitTable(self, p, t_lo, t_hi)

    def evaluate(self, f, p: FlowPoint) -> float:
        base = p.base_array[None, :]
        h = np.array([p.height])
        return float(f.evaluate(base, h, self.roof.eval(base))[0])

    # -- stable structure --------------------------------------------------

    def stable_offset(self, p: FlowPoint, q: FlowPoint,
                      max_stable: float = 0.45, tol: float = 1e-8) -> float:
        """Signed e_s displacement from p.base to q.base.

        Raises ChartError unless q.base is on the local stable leaf of
        p.base (unstable component below tol, stable one below the local
        guard, which defaults to just under the torus injectivity radius).
        """
        diff = q.base_array - p.base_array
        diff -= np.round(diff)
        du = float(self.base.unstable_component(diff))
        ds = float(self.base.stable_component(diff))
        if abs(du) > tol:
            raise ChartError(f"not on the local stable leaf: unstable "
                             f"offset {du:.3e} exceeds {tol:.1e}")
        if abs(ds) > max_stable:
            raise ChartError(f"stable offset {ds:.3f} beyond the local "
                             f"guard {max_stable}")
        return ds

    def chi(self, x_base: np.ndarray, y_base: np.ndarray,
            tol: float = 5e-15) -> float:
        """sum_{n>=0} [r(B^n x) - r(B^n y)] for stable-equivalent bases."""
        if self.roof.is_constant:
            return 0.0
        x = np.asarray(x_base, float).copy()
        y = np.asarray(y_base, float).copy()
        lam_s = self.base.lam_s
        lip = self.roof.lipschitz()
        diff = x - y
        diff -= np.round(diff)
        d = float(np.linalg.norm(diff))
        total = 0.0
        n = 0
        while lip * d * lam_s ** n / (1.0 - lam_s) > tol and n < 400:
            total += float(self.roof.eval(x) - self.roof.eval(y))
            x = self.base.apply(x)
            y = self.base.apply(y)
            n += 1
        return total

    def chi_back(self, x_base: np.ndarray, y_base: np.ndarray,
                 tol: float = 5e-15) -> float:
        """sum_{n>=1} [r(B^-n x) - r(B^-n y)] for unstable-equivalent bases."""
        if self.roof.is_constant:
            return 0.0
        x = np.asarray(x_base, float).copy()
        y = np.asarray(y_base, float).copy()
        lam_s = self.base.lam_s
        lip = self.roof.lipschitz()
        diff = x - y
        diff -= np.round(diff)
        d = float(np.linalg.norm(diff))
        total = 0.0
        n = 1
        while lip * d * lam_s ** n / (1.0 - lam_s) > tol and n < 400:
            x = self.base.apply_inverse(x)
            y = self.base.apply_inverse(y)
            total += float(self.roof.eval(x) - self.roof.eval(y))
            n += 1
        return total

    def unstable_leaf_point(self, p: FlowPoint, du: float) -> FlowPoint:
        """The point of the strong unstable leaf of p at signed unstable
        arc length du (in the base metric)."""
        base = np.mod(p.base_array + du * self.base.e_u, 1.0)
        pt = (float(base[0]), float(base[1]))
        if self.roof.is_constant:
            return FlowPoint(pt, p.height)
        height = p.height + self.chi_back(p.base_array, base)
        r = float(self.roof.eval(base))
        if 0.0 <= height < r:
            return FlowPoint(pt, float(height))
        return self.flow(FlowPoint(pt, 0.0), float(height))

    def alignment_time(self, p: FlowPoint, q: FlowPoint,
                       max_stable: float = 0.45) -> float:
        """The flow time eta with Phi^eta(p) on the strong stable set of q.

        Requires q on the local weak stable set of p; heights are taken in
        their canonical [0, roof) windows, so the returned branch is the
        in-chart one (for q = Phi^t(p) with small t it equals t).
        """
        self.stable_offset(p, q, max_stable=max_stable)   # validates leaf
        return (q.height - p.height
                - self.chi(q.base_array, p.base_array))

    # -- quadrature --------------------------------------------------------

    def orbit_integral(self, f, p: FlowPoint, t0: float, t1: float,
                       tol: float = 1e-9):
        """Integral of f along the orbit of p over [t0, t1] (signed)."""
        sign = 1.0
        if t1 < t0:
            t0, t1, sign = t1, t0, -1.0
        if t1 == t0:
            return 0.0, 0.0
        table = self.orbit_table(p, t0 - 1e-9, t1 + 1e-9)
        cuts = [t0] + list(table.crossings_in(t0, t1)) + [t1]

        def evalf(ts):
            b, h, r = table.points(ts)
            return f.evaluate(b, h, r)

        total, err = 0.0, 0.0
        for a, b in zip(cuts, cuts[1:]):
            seg_tol = tol * max((b - a) / (t1 - t0), 1e-3)
            v, e = _adaptive_simpson(evalf, a, b, seg_tol)
            total += v
            err += e
        return sign * total, err

    def birkhoff_defect(self, f, p: FlowPoint, q: FlowPoint,
                        tol: float = 1e-8, t_max: float = 400.0,
                        max_stable: float = 0.45) -> DefectResult:
        """The asymptotic difference of forward f-integrals between q and
        the alignment of p, minus the alignment leg:

            int_0^inf [f(Phi^t q) - f(Phi^t Phi^eta p)] dt
              - int_0^eta f(Phi^t p) dt.

        The infinite integral is truncated where the geometric tail bound
        (contraction rate log(lam_u)/sup r along strong stable pairs) drops
        below the tolerance; the bound is part of the result.
        """
        eta = self.alignment_time(p, q, max_stable=max_stable)
        p_al = self.flow(p, eta)
        diff = q.base_array - p_al.base_array
        diff -= np.round(diff)
        d0 = abs(float(self.base.stable_component(diff))) + 1e-300
        lip = f.lipschitz_bound(self.roof) if hasattr(f, "lipschitz_bound") \
            else f.lipschitz()
        beta2 = math.log(self.base.lam_u) / self.roof.sup()
        c_d = 3.0 * self.base.lam_u * (1.0 + 2.0 * self.roof.lipschitz())
        if lip * c_d * d0 / beta2 <= tol / 2:
            T = self.roof.sup()   # tail already under tolerance at T=0
        else:
            T = math.log(2.0 * lip * c_d * d0 / (tol * beta2)) / beta2
        if T > t_max:
            raise QuadratureError(
                f"tail bound needs truncation T={T:.1f} beyond t_max="
                f"{t_max}; raise t_max or loosen tol")
        tail = lip * c_d * d0 * math.exp(-beta2 * T) / beta2

        tab_q = self.orbit_table(q, -1e-9, T + 1e-9)
        tab_p = self.orbit_table(p_al, -1e-9, T + 1e-9)
        cuts = np.unique(np.concatenate(
            [[0.0], tab_q.crossings_in(0.0, T), tab_p.crossings_in(0.0, T),
             [T]]))

        def evalf(ts):
            bq, hq, rq = tab_q.points(ts)
            bp, hp, rp = tab_p.points(ts)
            return f.evaluate(bq, hq, rq) - f.evaluate(bp, hp, rp)

        total, qerr = 0.0, 0.0
        for a, b in zip(cuts, cuts[1:]):
            seg_tol = tol * max((b - a) / max(T, 1e-9), 1e-3)
            v, e = _adaptive_simpson(evalf, a, b, seg_tol)
            total += v
            qerr += e

        leg, leg_err = self.orbit_integral(f, p, 0.0, eta, tol=tol)
        return DefectResult(total - leg, tail + qerr + leg_err + tol, eta, T)

    # -- cocycles -----------------------------------------------------------

    def roof_fraction_change(self, p: FlowPoint, t: float) -> float:
        """Crossing count plus fractional ends: the continuous odometer
        theta with theta(p, s+t) = theta(p, s) + theta(Phi^s p, t)."""
        table = self.orbit_table(p, min(0.0, t) - 1e-9, max(0.0, t) + 1e-9)
        return table.fraction(t) - table.fraction(0.0)

    def _psi(self, p: FlowPoint) -> float:
        if self.weight.is_trivial:
            return 0.0
        base = p.base_array[None, :]
        return float(self.weight.evaluate(base, np.array([p.height]),
                                          self.roof.eval(base))[0])

    def flow_cocycles(self, p: FlowPoint, t: float) -> CocycleValues:
        """Closed-form log-determinants over the flow-box metric.

        transverse = log(lam_u) * (roof fraction traversed) + conformal
        boundary term; stable is its negative plus the same boundary term;
        the leafwise normal bundle is one-dimensional so the log operator
        norm coincides with the stable log-determinant.
        """
        theta = self.roof_fraction_change(p, t)
        loglam = math.log(self.base.lam_u)
        bdry = self._psi(self.flow(p, t)) - self._psi(p)
        alpha = -loglam * theta + bdry
        alpha_perp = loglam * theta + bdry
        return CocycleValues(alpha, alpha_perp, alpha)

    def natural_observable(self) -> "NaturalExpansionRate":
        """minus the time derivative of the stable cocycle at t = 0.

        Demands a constant roof: for a varying roof the flow-box metric is
        only continuous across the gluing and the derivative would jump.
        """
        if not self.roof.is_constant:
            raise ValueError("the flow-box metric is C^1 only for constant "
                             "roofs; use a constant roof for this observable")
        return NaturalExpansionRate(math.log(self.base.lam_u),
                                    self.roof.poly.constant, self.weight)

    def check_property_A(self, rho: float, epsilon: float, T: float,
                         samples: int = 200, rng=None) -> PropertyAReport:
        """Sample min(transverse, -norm) and |rho*stable + transverse| at
        horizon T and report whether both displayed bounds hold."""
        rng = np.random.default_rng(0) if rng is None else rng
        floor = math.inf
        mismatch = 0.0
        for _ in range(samples):
            p = self.random_point(rng)
            cv = self.flow_cocycles(p, T)
            floor = min(floor, cv.transverse, -cv.norm)
            mismatch = max(mismatch, abs(rho * cv.stable + cv.transverse))
        holds = floor > 0.0 and mismatch < epsilon * floor
        return PropertyAReport(T, epsilon, floor, mismatch, holds, samples)


@dataclass(frozen=True)
class NaturalExpansionRate:
    """f(p) = log(lam_u)/roof - psi'(p) along the flow; positive and smooth
    for the constant-roof flow-box metric with a small conformal factor."""

    log_lam_u: float
    roof_constant: float
    weight: ConformalWeight

    def evaluate(self, bases, heights, roofs) -> np.ndarray:
        out = np.full(np.asarray(heights, float).shape,
                      self.log_lam_u / self.roof_constant)
        if not self.weight.is_trivial:
            out -= self.weight.flow_derivative(bases, heights, roofs)
        return out

    def lipschitz_bound(self, roof: RoofFunction) -> float:
        if self.weight.is_trivial:
            return 0.0
        # flow derivative is bump'(s/r) chi(x)/r; bound its variation
        total = 0.0
        bump = self.weight.bump
        r = self.roof_constant
        for chi in self.weight.factors:
            amp = abs(chi.constant) + chi.amplitude()
            # d/ds term: bump''; use a crude numeric bound once
            total += (bump.deriv_sup() * chi.lipschitz() / r
                      + amp * _bump_second_sup(bump) / (r * r))
        return total

    def lower_bound(self) -> float:
        worst = 0.0
        bump = self.weight.bump
        for chi in self.weight.factors:
            amp = abs(chi.constant) + chi.amplitude()
            worst += amp * bump.deriv_sup() / self.roof_constant
        return self.log_lam_u / self.roof_constant - worst

    def is_positive(self) -> bool:
        return self.lower_bound() > 0.0


_BUMP_SECOND = {}


def _bump_second_sup(bump) -> float:
    key = id(type(bump))
    if key not in _BUMP_SECOND:
        grid = np.linspace(0.0, 1.0, 20001)
        d = bump.deriv(grid)
        _BUMP_SECOND[key] = float(np.abs(np.gradient(d, grid)).max())
    return _BUMP_SECOND[key]


def default_system(roof_constant: float = 1.0) -> SuspensionSystem:
    """Cat-map suspension with a constant roof and trivial weight."""
    return SuspensionSystem(cat_map(), RoofFunction.constant_roof(roof_constant))
