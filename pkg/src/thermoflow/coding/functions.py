"""Function ingredients for the suspension: trigonometric polynomials on
the torus, a smooth bump profile in the flow direction, and observables
assembled from the two.

A function on the suspension space must match across the roof gluing
(x, r(x)) ~ (Bx, 0).  Torus functions alone do not, so observables take
the form  c0 + sum_j bump_j(s / r(x)) * chi_j(x)  with bump profiles that
vanish to all orders at 0 and 1; these are smooth on the glued space for
any roof and any base map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TrigPolynomial",
    "BumpProfile",
    "RoofFunction",
    "FlowObservable",
    "ConformalWeight",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TrigPolynomial:
    """constant + sum of c*cos(2 pi (m x + n y)) + s*sin(2 pi (m x + n y)).

    ``terms`` maps integer frequency pairs (m, n) to (cos, sin) amplitude
    pairs.
    """

    constant: float = 0.0
    terms: tuple = ()          # ((m, n, cos_amp, sin_amp), ...)

    @staticmethod
    def make(constant=0.0, terms=None) -> "TrigPolynomial":
        tt = tuple((int(m), int(n), float(c), float(s))
                   for (m, n, c, s) in (terms or ()))
        return TrigPolynomial(float(constant), tt)

    def eval(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        x, y = xy[..., 0], xy[..., 1]
        out = np.full(x.shape, self.constant)
        for (m, n, c, s) in self.terms:
            phase = _TWO_PI * (m * x + n * y)
            if c:
                out += c * np.cos(phase)
            if s:
                out += s * np.sin(phase)
        return out

    def amplitude(self) -> float:
        """Upper bound for |value - constant|."""
        return sum(math.hypot(c, s) for (_m, _n, c, s) in self.terms)

    def lipschitz(self) -> float:
        """Upper bound for the Euclidean Lipschitz constant."""
        return sum(_TWO_PI * math.hypot(m, n) * math.hypot(c, s)
                   for (m, n, c, s) in self.terms)

    def lower_bound(self) -> float:
        return self.constant - self.amplitude()

    def upper_bound(self) -> float:
        return self.constant + self.amplitude()

    def to_json_dict(self) -> dict:
        return {"constant": self.constant,
                "terms": [list(t) for t in self.terms]}

    @staticmethod
    def from_json_dict(d) -> "TrigPolynomial":
        return TrigPolynomial.make(d.get("constant", 0.0),
                                   [tuple(t) for t in d.get("terms", [])])


class BumpProfile:
    """The standard bump exp(-1/(t(1-t))) on (0,1), scaled to peak at 1.

    Vanishes with all derivatives at t = 0 and t = 1, which is what makes
    flow-direction observables smooth across the roof gluing.
    """

    peak_scale = math.exp(4.0)   # 1 / max of the raw bump (at t = 1/2)

    def eval(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = (t > 0.0) & (t < 1.0)
        out = np.zeros(t.shape)
        ts = np.where(inside, t, 0.5)
        out[inside] = (self.peak_scale *
                       np.exp(-1.0 / (ts * (1.0 - ts))))[inside]
        return out

    def deriv(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = (t > 0.0) & (t < 1.0)
        out = np.zeros(t.shape)
        ts = np.where(inside, t, 0.5)
        q = ts * (1.0 - ts)
        out[inside] = (self.peak_scale * np.exp(-1.0 / q) *
                       (1.0 - 2.0 * ts) / (q * q))[inside]
        return out

    # max |rho'|, found once on a fine grid (the profile is fixed)
    _deriv_sup = None

    def deriv_sup(self) -> float:
        if BumpProfile._deriv_sup is None:
            grid = np.linspace(0.0, 1.0, 20001)
            BumpProfile._deriv_sup = float(np.abs(self.deriv(grid)).max())
        return BumpProfile._deriv_sup


@dataclass(frozen=True)
class RoofFunction:
    """A positive trig-polynomial return-time function; inf r > 0 is
    enforced at construction from the coefficient bound."""

    poly: TrigPolynomial

    def __post_init__(self):
        if self.poly.lower_bound() <= 0.0:
            raise ValueError(
                f"roof may vanish: constant {self.poly.constant} minus "
                f"amplitude {self.poly.amplitude()} is not positive")

    @staticmethod
    def constant_roof(c: float) -> "RoofFunction":
        return RoofFunction(TrigPolynomial.make(c))

    @property
    def is_constant(self) -> bool:
        return not self.poly.terms

    def eval(self, xy) -> np.ndarray:
        return self.poly.eval(xy)

    def inf(self) -> float:
        return self.poly.lower_bound()

    def sup(self) -> float:
        return self.poly.upper_bound()

    def lipschitz(self) -> float:
        return self.poly.lipschitz()


@dataclass(frozen=True)
class FlowObservable:
    """c0 + sum_j bump(s/r(x)) * chi_j(x): a smooth function on the
    suspension space (any roof, any base map)."""

    constant: float
    factors: tuple = ()        # TrigPolynomial chi_j, all with the one bump
    bump: BumpProfile = field(default_factory=BumpProfile, compare=False)

    @staticmethod
    def make(constant, factors=()) -> "FlowObservable":
        return FlowObservable(float(constant), tuple(factors))

    def evaluate(self, bases, heights, roofs) -> np.ndarray:
        bases = np.asarray(bases, dtype=float)
        t = np.asarray(heights, dtype=float) / np.asarray(roofs, dtype=float)
        out = np.full(t.shape, self.constant)
        if self.factors:
            b = self.bump.eval(t)
            for chi in self.factors:
                out += b * chi.eval(bases)
        return out

    def lower_bound(self) -> float:
        # each factor enters as bump * chi with bump in [0, 1]
        return self.constant + sum(min(0.0, c.lower_bound())
                                   for c in self.factors)

    def is_positive(self) -> bool:
        return self.lower_bound() > 0.0

    def lipschitz_bound(self, roof: RoofFunction) -> float:
        """Upper bound for |f(p)-f(q)| / dist(p,q) on the suspension.

        Uses d/dx (s/r) bounded by sup(r)*Lip(r)/inf(r)^2 and
        d/ds (s/r) bounded by 1/inf(r).
        """
        if not self.factors:
            return 0.0
        r_inf, r_sup, r_lip = roof.inf(), roof.sup(), roof.lipschitz()
        t_lip = 1.0 / r_inf + r_sup * r_lip / (r_inf * r_inf)
        total = 0.0
        for chi in self.factors:
            amp = abs(chi.constant) + chi.amplitude()
            total += chi.lipschitz() + amp * self.bump.deriv_sup() * t_lip
        return total

    def to_json_dict(self) -> dict:
        return {"constant": self.constant,
                "factors": [c.to_json_dict() for c in self.factors]}

    @staticmethod
    def from_json_dict(d) -> "FlowObservable":
        return FlowObservable.make(
            d.get("constant", 0.0),
            [TrigPolynomial.from_json_dict(c) for c in d.get("factors", [])])


@dataclass(frozen=True)
class ConformalWeight:
    """A smooth conformal factor psi for the flow-box metric, of the same
    bump-times-torus-function form as observables (zero mean part in the
    flow direction at the section, so the metric glues smoothly)."""

    factors: tuple = ()
    bump: BumpProfile = field(default_factory=BumpProfile, compare=False)

    @staticmethod
    def make(factors=()) -> "ConformalWeight":
        return ConformalWeight(tuple(factors))

    @property
    def is_trivial(self) -> bool:
        return not self.factors

    def evaluate(self, bases, heights, roofs) -> np.ndarray:
        t = np.asarray(heights, dtype=float) / np.asarray(roofs, dtype=float)
        out = np.zeros(t.shape)
        if self.factors:
            b = self.bump.eval(t)
            for chi in self.factors:
                out += b * chi.eval(np.asarray(bases, dtype=float))
        return out

    def flow_derivative(self, bases, heights, roofs) -> np.ndarray:
        """d/dt psi(Phi^t p) at t=0: bump'(s/r) * chi(x) / r(x)."""
        roofs = np.asarray(roofs, dtype=float)
        t = np.asarray(heights, dtype=float) / roofs
        out = np.zeros(t.shape)
        if self.factors:
            db = self.bump.deriv(t)
            for chi in self.factors:
                out += db * chi.eval(np.asarray(bases, dtype=float)) / roofs
        return out

    def sup_bound(self) -> float:
        return sum(abs(c.constant) + c.amplitude() for c in self.factors)

    def to_json_dict(self) -> dict:
        return {"factors": [c.to_json_dict() for c in self.factors]}

    @staticmethod
    def from_json_dict(d) -> "ConformalWeight":
        return ConformalWeight.make(
            [TrigPolynomial.from_json_dict(c) for c in d.get("factors", [])])
