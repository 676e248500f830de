"""Competition model: growth profiles, reaction terms, equilibria, hypotheses.

The model couples two species through Lotka-Volterra style competition with
spatially varying carrying capacities.  Per-capita growth rates are

    g_a(x, a, b) = f_a(x) - a - s_a * b
    g_b(x, a, b) = f_b(x) - b - s_b * a

where ``f_a`` decreases and ``f_b`` increases across the unit interval, so
each species is favoured near one end.  Strong competition (``s_a * s_b > 1``)
makes the homogeneous dynamics bistable wherever both pure states are viable,
which happens on an interior window of positions.  Everything downstream
(steady-state PDE runs, traveling-wave speeds, interface location) consumes
the model through this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from frontier.errors import DomainError, HypothesisError

_VALIDATION_SAMPLES = 1001

STABLE = "stable"
UNSTABLE = "unstable"
SADDLE = "saddle"
MARGINAL = "marginal"


class GradientSpec:
    """Spatial growth-capacity profile on [0, 1].

    Wraps one of three profile families (linear, exponential, tabulated
    monotone-cubic) behind a callable with an exact or interpolant
    derivative.  Construction validates positivity above ``floor`` and the
    declared monotonicity direction on a dense sample; a profile that fails
    either check is rejected outright rather than flagged later.

    Parameters
    ----------
    family : str
        One of ``"linear"``, ``"exponential"``, ``"tabulated"``.
    direction : str
        Declared monotonicity, ``"decreasing"`` or ``"increasing"``.
    floor : float
        Strict lower bound the profile must stay above on [0, 1].
    """

    def __init__(self, family: str, direction: str, floor: float = 1e-3,
                 *, params: dict):
        if family not in ("linear", "exponential", "tabulated"):
            raise DomainError(f"unknown profile family {family!r}")
        if direction not in ("decreasing", "increasing"):
            raise DomainError(f"unknown direction {direction!r}")
        if not (floor > 0.0):
            raise DomainError("floor must be strictly positive")
        self.family = family
        self.direction = direction
        self.floor = float(floor)
        self.params = dict(params)
        self._build()
        self._validate()

    # -- constructors ------------------------------------------------------

    @classmethod
    def linear(cls, intercept: float, slope: float, *, floor: float = 1e-3
               ) -> "GradientSpec":
        """Profile ``intercept + slope * x``."""
        direction = "decreasing" if slope < 0 else "increasing"
        return cls("linear", direction, floor,
                   params={"intercept": float(intercept),
                           "slope": float(slope)})

    @classmethod
    def exponential(cls, scale: float, rate: float, *, floor: float = 1e-3
                    ) -> "GradientSpec":
        """Profile ``scale * exp(rate * x)`` with ``scale > 0``."""
        if not (scale > 0.0):
            raise DomainError("exponential profile needs scale > 0")
        direction = "decreasing" if rate < 0 else "increasing"
        return cls("exponential", direction, floor,
                   params={"scale": float(scale), "rate": float(rate)})

    @classmethod
    def tabulated(cls, knots: Sequence[float], values: Sequence[float],
                  *, floor: float = 1e-3) -> "GradientSpec":
        """Monotone cubic interpolant through ``(knots, values)``.

        Knots must be strictly increasing and bracket [0, 1]; values must be
        monotone so the interpolant inherits a definite direction.
        """
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
            raise DomainError("knots and values must be matching 1-d arrays")
        if not np.all(np.diff(knots) > 0):
            raise DomainError("knots must be strictly increasing")
        if knots[0] > 0.0 or knots[-1] < 1.0:
            raise DomainError("knots must cover [0, 1]")
        dv = np.diff(values)
        if np.all(dv < 0):
            direction = "decreasing"
        elif np.all(dv > 0):
            direction = "increasing"
        else:
            raise DomainError("tabulated values must be strictly monotone")
        return cls("tabulated", direction, floor,
                   params={"knots": tuple(knots), "values": tuple(values)})

    # -- evaluation --------------------------------------------------------

    def _build(self) -> None:
        p = self.params
        if self.family == "linear":
            c0, c1 = p["intercept"], p["slope"]
            self._f = lambda x: c0 + c1 * np.asarray(x, dtype=float)
            self._df = lambda x: np.full_like(
                np.asarray(x, dtype=float), c1)
        elif self.family == "exponential":
            s, r = p["scale"], p["rate"]
            self._f = lambda x: s * np.exp(r * np.asarray(x, dtype=float))
            self._df = lambda x: s * r * np.exp(r * np.asarray(x, dtype=float))
        else:
            interp = PchipInterpolator(np.asarray(p["knots"], dtype=float),
                                       np.asarray(p["values"], dtype=float))
            deriv = interp.derivative()
            self._f = lambda x: interp(np.asarray(x, dtype=float))
            self._df = lambda x: deriv(np.asarray(x, dtype=float))

    def _validate(self) -> None:
        xs = np.linspace(0.0, 1.0, _VALIDATION_SAMPLES)
        vals = self._f(xs)
        if not np.all(vals > self.floor):
            bad = xs[np.argmax(~(vals > self.floor))]
            raise DomainError(
                f"profile dips to the floor {self.floor:g} near x={bad:.4f}")
        dv = np.diff(vals)
        ok = np.all(dv < 0) if self.direction == "decreasing" \
            else np.all(dv > 0)
        if not ok:
            bad = xs[np.argmax(~((dv < 0) if self.direction == "decreasing"
                                 else (dv > 0)))]
            raise DomainError(
                f"profile is not {self.direction} near x={bad:.4f}")

    def __call__(self, x):
        out = self._f(x)
        return float(out) if np.isscalar(x) else out

    def derivative(self, x):
        out = self._df(x)
        return float(out) if np.isscalar(x) else out

    def __repr__(self) -> str:
        return (f"GradientSpec({self.family!r}, {self.direction!r}, "
                f"floor={self.floor!r}, params={self.params!r})")

    def _key(self):
        return (self.family, self.direction, self.floor,
                tuple(sorted(self.params.items())))

    def __eq__(self, other):
        if not isinstance(other, GradientSpec):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


@dataclass(frozen=True)
class CompetitionModel:
    """Immutable bundle of profiles and competition/diffusion coefficients.

    ``gradient_a`` should decrease and ``gradient_b`` increase, with
    ``s_a * s_b > 1``; those structural facts are certified by
    :func:`verify_hypotheses` rather than the constructor, so that a
    deliberately broken model can still be built and diagnosed.  Only basic
    sanity (positive diffusivities, nonnegative competition) is enforced
    here.
    """

    gradient_a: GradientSpec
    gradient_b: GradientSpec
    s_a: float
    s_b: float
    d_a: float = 1.0
    d_b: float = 1.0

    def __post_init__(self):
        if not (self.d_a > 0.0 and self.d_b > 0.0):
            raise DomainError("diffusivities must be strictly positive")
        if self.s_a < 0.0 or self.s_b < 0.0:
            raise DomainError("competition strengths must be nonnegative")

    # Raw profile access; no domain checks, safe for hot loops.
    def f_a(self, x):
        return self.gradient_a(x)

    def f_b(self, x):
        return self.gradient_b(x)

    def growth(self, x, a, b):
        """Per-capita growth rates (g_a, g_b); no argument validation."""
        return (self.gradient_a(x) - a - self.s_a * b,
                self.gradient_b(x) - b - self.s_b * a)

    def growth_partials(self):
        """(dg_a/da, dg_a/db, dg_b/da, dg_b/db); constants for this family."""
        return (-1.0, -self.s_a, -self.s_b, -1.0)

    def reaction_bound(self) -> float:
        """Sharp bound on |g| over [0,1] x [0, max f_a] x [0, max f_b]."""
        xs = np.linspace(0.0, 1.0, _VALIDATION_SAMPLES)
        fa = np.asarray(self.gradient_a(xs), dtype=float)
        fb = np.asarray(self.gradient_b(xs), dtype=float)
        fa_min, fa_max = float(fa.min()), float(fa.max())
        fb_min, fb_max = float(fb.min()), float(fb.max())
        ga = max(fa_max, fa_max + self.s_a * fb_max - fa_min)
        gb = max(fb_max, fb_max + self.s_b * fa_max - fb_min)
        return max(ga, gb)


class ReactionEval(NamedTuple):
    g_a: object
    g_b: object
    dga_da: float
    dga_db: float
    dgb_da: float
    dgb_db: float


def evaluate_reaction(model: CompetitionModel, x, a, b) -> ReactionEval:
    """Growth rates and their constant concentration-partials at (x, a, b).

    Accepts scalars or broadcastable arrays; ``x`` must lie in [0, 1].
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > 1.0):
        raise DomainError("position outside [0, 1]")
    g_a, g_b = model.growth(x, a, b)
    pa, pb, qa, qb = model.growth_partials()
    return ReactionEval(g_a, g_b, pa, pb, qa, qb)


# -- equilibria ------------------------------------------------------------


class Equilibrium(NamedTuple):
    a: float
    b: float
    label: str
    eigenvalues: tuple


class EquilibriumSet(NamedTuple):
    x: float
    origin: Equilibrium
    pure_a: Equilibrium
    pure_b: Equilibrium
    saddle: Optional[Equilibrium]


def jacobian(model: CompetitionModel, x: float, a: float, b: float
             ) -> np.ndarray:
    """Jacobian of (a*g_a, b*g_b) with respect to (a, b)."""
    g_a, g_b = model.growth(x, a, b)
    pa, pb, qa, qb = model.growth_partials()
    return np.array([[g_a + a * pa, a * pb],
                     [b * qa, g_b + b * qb]])


def _classify(eigs: np.ndarray, tol: float, interior: bool) -> str:
    re = np.real(eigs)
    if np.any(np.abs(re) <= tol):
        return MARGINAL
    if np.all(re < 0.0):
        return STABLE
    if interior and np.any(re < 0.0):
        return SADDLE
    return UNSTABLE


def equilibria(model: CompetitionModel, x: float, eig_tol: float = 1e-10
               ) -> EquilibriumSet:
    """All homogeneous equilibria of the frozen-x dynamics, with labels.

    Pure states sit at (f_a(x), 0) and (0, f_b(x)); the interior crossing
    state is included only when both of its coordinates are nonnegative.
    Labels come from Jacobian eigenvalue real parts: any within ``eig_tol``
    of zero gives ``marginal``, never a silent stable/unstable call.
    """
    if not (0.0 <= x <= 1.0):
        raise DomainError("position outside [0, 1]")
    fa = model.f_a(x)
    fb = model.f_b(x)

    def make(a, b, interior=False):
        eigs = np.linalg.eigvals(jacobian(model, x, a, b))
        return Equilibrium(a, b, _classify(eigs, eig_tol, interior),
                           tuple(np.sort_complex(eigs).tolist()))

    origin = make(0.0, 0.0)
    pure_a = make(fa, 0.0)
    pure_b = make(0.0, fb)

    saddle = None
    denom = model.s_a * model.s_b - 1.0
    if abs(denom) > eig_tol:
        a_star = (model.s_a * fb - fa) / denom
        b_star = (model.s_b * fa - fb) / denom
        # admissible up to roundoff at the window edges
        if a_star >= -eig_tol and b_star >= -eig_tol:
            saddle = make(max(a_star, 0.0), max(b_star, 0.0), interior=True)
    return EquilibriumSet(float(x), origin, pure_a, pure_b, saddle)


class BistableInterval(NamedTuple):
    lower: float
    upper: float


def find_bistable_interval(model: CompetitionModel,
                           xtol: float = 1e-12) -> BistableInterval:
    """Window of positions where both pure states resist invasion.

    ``lower`` is the root of ``f_a - s_a * f_b``, the growth rate of a
    trace of species A atop the pure-B state; ``upper`` is the root of
    ``f_b - s_b * f_a``, the reverse margin.  Both margins are strictly
    monotone under the standing hypotheses, so endpoint signs decide
    existence; a missing sign change or an inverted pair raises
    :class:`HypothesisError`.
    """
    def g_lower(x):
        return model.f_a(x) - model.s_a * model.f_b(x)

    def g_upper(x):
        return model.f_b(x) - model.s_b * model.f_a(x)

    roots = []
    for g, code in ((g_lower, "lower"), (g_upper, "upper")):
        g0, g1 = g(0.0), g(1.0)
        if g0 == 0.0:
            roots.append(0.0)
            continue
        if g1 == 0.0:
            roots.append(1.0)
            continue
        if g0 * g1 > 0.0:
            raise HypothesisError(
                f"no {code} threshold: invasion margin has one sign on [0, 1]",
                code="H2")
        roots.append(brentq(g, 0.0, 1.0, xtol=xtol))
    lower, upper = roots
    if not lower < upper:
        raise HypothesisError(
            "invasion thresholds are not ordered: no bistable window",
            code="H2")
    return BistableInterval(lower, upper)


class EquilibriumDerivatives(NamedTuple):
    pure_a: float
    pure_b: float
    saddle_a: float
    saddle_b: float


def equilibrium_derivatives(model: CompetitionModel, x: float
                            ) -> EquilibriumDerivatives:
    """Position-derivatives of the equilibrium branches, by implicit quotients.

    Pure branches: solving g(x, u) = 0 for one species gives
    ``du/dx = -d_x g / d_u g``.  Interior branch: Cramer quotients of the
    2x2 system, valid only where that branch is admissible, i.e. strictly
    inside the bistable window (:class:`DomainError` otherwise).
    """
    dfa = model.gradient_a.derivative(x)
    dfb = model.gradient_b.derivative(x)
    pa, pb, qa, qb = model.growth_partials()

    d_pure_a = -dfa / pa
    d_pure_b = -dfb / qb

    window = find_bistable_interval(model)
    if not (window.lower < x < window.upper):
        raise DomainError(
            f"x={x:g} outside the open bistable window "
            f"({window.lower:g}, {window.upper:g})")
    det = pa * qb - pb * qa
    d_saddle_a = (pb * dfb - dfa * qb) / det
    d_saddle_b = (dfa * qa - pa * dfb) / det
    return EquilibriumDerivatives(d_pure_a, d_pure_b, d_saddle_a, d_saddle_b)


# -- hypothesis certification ---------------------------------------------


class HypothesisCheck(NamedTuple):
    code: str
    description: str
    passed: bool
    first_violation: Optional[float]
    detail: str


@dataclass
class HypothesisReport:
    checks: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, code: str) -> HypothesisCheck:
        for c in self.checks:
            if c.code == code:
                return c
        raise KeyError(code)


def _first_bad(xs, mask):
    idx = np.argmax(mask)
    return float(xs[idx]) if mask[idx] else None


def verify_hypotheses(model: CompetitionModel,
                      n_samples: int = _VALIDATION_SAMPLES
                      ) -> HypothesisReport:
    """Certify the structural hypotheses on a dense sample of positions.

    Every check lands in the report with a pass flag, the first violating
    position when there is one, and a short detail string; nothing raises.
    Codes: H1 (profile floors and monotonicity), H2 (ordered invasion
    thresholds), H3 (strong competition), GH2 (sign pattern of the growth
    field and its partials), GH1a (viable pure states), GH1b (stability
    exchange of the pure states across the thresholds), GH1c (admissible
    interior crossing state with negative Jacobian determinant inside the
    window).
    """
    xs = np.linspace(0.0, 1.0, n_samples)
    fa = np.asarray(model.gradient_a(xs), dtype=float)
    fb = np.asarray(model.gradient_b(xs), dtype=float)
    dfa = np.asarray(model.gradient_a.derivative(xs), dtype=float)
    dfb = np.asarray(model.gradient_b.derivative(xs), dtype=float)
    checks = []

    # H1: profiles stay above their floors, f_a falls, f_b rises.
    bad = (~(fa > model.gradient_a.floor) | ~(fb > model.gradient_b.floor)
           | (dfa >= 0.0) | (dfb <= 0.0))
    checks.append(HypothesisCheck(
        "H1", "profiles positive above floor, f_a decreasing, f_b increasing",
        not bad.any(), _first_bad(xs, bad),
        "" if not bad.any() else "floor or monotonicity violated"))

    # H3: strong competition.
    h3 = model.s_a * model.s_b > 1.0
    checks.append(HypothesisCheck(
        "H3", "competition product s_a*s_b exceeds 1", h3, None,
        "" if h3 else f"s_a*s_b = {model.s_a * model.s_b:g}"))

    # GH2: growth positive at the origin, profile slopes signed, cross
    # terms strictly competitive.
    bad = ~(fa > 0.0) | ~(fb > 0.0) | (dfa >= 0.0) | (dfb <= 0.0)
    gh2_consts = model.s_a > 0.0 and model.s_b > 0.0
    gh2_ok = (not bad.any()) and gh2_consts
    checks.append(HypothesisCheck(
        "GH2", "sign pattern of growth field and partials",
        gh2_ok, _first_bad(xs, bad),
        "" if gh2_ok else ("nonpositive competition strength"
                           if not gh2_consts else "field sign violated")))

    # GH1a: viable pure states at every position.
    bad = ~(fa > 0.0) | ~(fb > 0.0)
    checks.append(HypothesisCheck(
        "GH1a", "pure single-species states exist with positive density",
        not bad.any(), _first_bad(xs, bad),
        "" if not bad.any() else "a profile is nonpositive"))

    # H2 needs the thresholds; GH1b/GH1c depend on them.
    try:
        window = find_bistable_interval(model)
    except HypothesisError as exc:
        window = None
        checks.append(HypothesisCheck(
            "H2", "ordered invasion thresholds exist", False, None, str(exc)))
    else:
        checks.append(HypothesisCheck(
            "H2", "ordered invasion thresholds exist", True, None,
            f"window ({window.lower:.6g}, {window.upper:.6g})"))

    if window is None:
        checks.append(HypothesisCheck(
            "GH1b", "pure states trade stability across the thresholds",
            False, None, "no bistable window"))
        checks.append(HypothesisCheck(
            "GH1c", "admissible interior state with negative determinant",
            False, None, "no bistable window"))
    else:
        h = 1.0 / (n_samples - 1)
        margin = 2.0 * h
        # GH1b: invasion margins change sign exactly at the thresholds.
        into_b = fa - model.s_a * fb   # growth of a trace of A atop pure B
        into_a = fb - model.s_b * fa   # growth of a trace of B atop pure A
        bad = np.zeros_like(xs, dtype=bool)
        below = xs < window.lower - margin
        above = xs > window.lower + margin
        bad |= below & ~(into_b > 0.0)
        bad |= above & ~(into_b < 0.0)
        below = xs < window.upper - margin
        above = xs > window.upper + margin
        bad |= below & ~(into_a < 0.0)
        bad |= above & ~(into_a > 0.0)
        checks.append(HypothesisCheck(
            "GH1b", "pure states trade stability across the thresholds",
            not bad.any(), _first_bad(xs, bad),
            "" if not bad.any() else "invasion margin has the wrong sign"))

        # GH1c: interior state admissible inside the window, det < 0 there.
        inside = (xs > window.lower + margin) & (xs < window.upper - margin)
        denom = model.s_a * model.s_b - 1.0
        bad = np.zeros_like(xs, dtype=bool)
        if abs(denom) < 1e-14:
            bad[inside] = True
            detail = "competition product equals 1, no interior state"
        else:
            a_star = (model.s_a * fb - fa) / denom
            b_star = (model.s_b * fa - fb) / denom
            pa, pb, qa, qb = model.growth_partials()
            det = (a_star * pa) * (b_star * qb) - (a_star * pb) * (b_star * qa)
            bad[inside] = (~(a_star[inside] > 0.0)
                           | ~(b_star[inside] > 0.0)
                           | ~(det[inside] < 0.0))
            detail = "interior state inadmissible or determinant >= 0"
        checks.append(HypothesisCheck(
            "GH1c", "admissible interior state with negative determinant",
            not bad.any(), _first_bad(xs, bad),
            "" if not bad.any() else detail))

    return HypothesisReport(checks)


def saturation_coefficient(production_rate: float,
                           saturation_rate: float) -> float:
    """Dimensionless competition strength from raw kinetic rates.

    Reduces a raw pair (production, saturation) to the single coefficient
    ``saturation / (saturation - production)`` used by the rescaled model;
    requires ``0 < production < saturation``.
    """
    if not (0.0 < production_rate < saturation_rate):
        raise DomainError(
            "need 0 < production_rate < saturation_rate for a meaningful "
            "competition strength")
    return saturation_rate / (saturation_rate - production_rate)
