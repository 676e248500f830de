"""Frozen-position traveling waves: profiles, speed map, boundary location.

At a frozen position x inside the bistable window the pair

    d_a * a'' + c * a' + a * g_a(x, a, b) = 0
    d_b * b'' + c * b' + b * g_b(x, a, b) = 0

on y in (-inf, inf) connects the pure-a state (f_a(x), 0) at -inf to the
pure-b state (0, f_b(x)) at +inf with a unique speed c(x).  Substituting
a translating profile into the parabolic system gives exactly this form,
so c > 0 means the a-dominated region invades (the front moves toward
larger y).  The translation degree of freedom is removed by pinning
a(0) = b(0), making (profiles, c) a square Newton system on a truncated
symmetric interval with Dirichlet equilibrium values at the ends.

Two independent routes to c are kept deliberately separate: a damped
Newton solve of the discretized boundary-value problem, and a time
integrator that tracks the a=b crossing of the parabolic dynamics and
fits its drift.  The boundary x* is the zero of the monotone map c(x).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import LinearOperator, onenormest, splu

from frontier.errors import (
    DomainError,
    DomainTooSmallError,
    NonConvergenceError,
)
from frontier.model import CompetitionModel, find_bistable_interval

BVP_SPACING = 0.02
TRACKING_SPACING = 0.05
TRACKING_DT = 1e-3
NEWTON_TOL = 1e-10
FAR_FIELD_TOL = 1e-6
CONDITION_WARN_THRESHOLD = 1e12


class ConditioningWarning(UserWarning):
    """The linearized wave system is badly conditioned (marginal far field)."""


def default_half_length(model: CompetitionModel, x: float) -> float:
    """Truncation half-length: generous multiple of the slowest tail scale.

    Tail decay at each far-field equilibrium is sqrt(rate/d) where rate is
    the smallest linearization eigenvalue magnitude; 20 lengths of the
    slowest tail keeps the truncation error below the far-field tolerance,
    with a floor of 50 diffusion lengths.
    """
    fa = model.f_a(x)
    fb = model.f_b(x)
    rate_a = min(fa, model.s_b * fa - fb)      # at (f_a, 0)
    rate_b = min(fb, model.s_a * fb - fa)      # at (0, f_b)
    min_rate = min(rate_a, rate_b)
    dmax = max(math.sqrt(model.d_a), math.sqrt(model.d_b))
    base = 50.0 * dmax
    if min_rate <= 0.0:
        return base
    return max(base, 20.0 * dmax / math.sqrt(min_rate))


@dataclass
class WaveProblem:
    """Truncated frozen-x wave problem on y in [-L, L] with m nodes."""

    model: CompetitionModel
    x_frozen: float
    L: Optional[float] = None
    m: Optional[int] = None

    def __post_init__(self):
        window = find_bistable_interval(self.model)
        if not (window.lower < self.x_frozen < window.upper):
            raise DomainError(
                f"x={self.x_frozen:g} outside the open bistable window "
                f"({window.lower:g}, {window.upper:g})")
        if self.L is None:
            self.L = default_half_length(self.model, self.x_frozen)
        if self.m is None:
            self.m = 2 * int(math.ceil(self.L / BVP_SPACING)) + 1
        if self.m < 5 or self.m % 2 == 0:
            raise DomainError("node count must be odd and at least 5")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.m - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.m)

    @property
    def equilibria(self) -> Tuple[float, float]:
        """Far-field values (a at -L, b at +L)."""
        return self.model.f_a(self.x_frozen), self.model.f_b(self.x_frozen)

    def widen(self, factor: float = 2.0) -> "WaveProblem":
        return WaveProblem(self.model, self.x_frozen, self.L * factor,
                           2 * int(math.ceil(self.L * factor / self.h)) + 1)


@dataclass
class WaveResult:
    x_frozen: float
    c: float
    y: np.ndarray
    a: np.ndarray
    b: np.ndarray
    phase_error: float
    solver: str
    converged: bool
    iterations: int
    residual: float
    far_field_mismatch: float
    L: float
    fit_residual: Optional[float] = None
    condition_estimate: Optional[float] = None


def _tanh_guess(problem: WaveProblem):
    a_eq, b_eq = problem.equilibria
    y = problem.nodes
    a = a_eq * 0.5 * (1.0 - np.tanh(y))
    b = b_eq * 0.5 * (1.0 + np.tanh(y))
    return a, b, 0.0


def _interp_guess(problem: WaveProblem, guess: WaveResult):
    a_eq, b_eq = problem.equilibria
    y = problem.nodes
    a = np.interp(y, guess.y, guess.a, left=a_eq, right=0.0)
    b = np.interp(y, guess.y, guess.b, left=0.0, right=b_eq)
    # rescale toward this problem's equilibria so the ends match exactly
    if guess.a[0] > 0.0:
        a *= a_eq / guess.a[0]
    if guess.b[-1] > 0.0:
        b *= b_eq / guess.b[-1]
    return a, b, guess.c


class _NewtonSystem:
    """Residual and sparse Jacobian of the pinned wave system."""

    def __init__(self, problem: WaveProblem):
        self.p = problem
        m = problem.m
        self.k = m - 2                      # interior nodes per species
        self.mid = (m - 1) // 2             # pinning node (y = 0)
        self.n_unknowns = 2 * self.k + 1
        self.a_eq, self.b_eq = problem.equilibria
        self.fa = problem.model.f_a(problem.x_frozen)
        self.fb = problem.model.f_b(problem.x_frozen)
        self._build_pattern()

    def _build_pattern(self):
        k, mid = self.k, self.mid
        rows, cols = [], []

        def add(r, c):
            rows.append(r)
            cols.append(c)

        for i in range(k):                  # species-a rows
            if i > 0:
                add(i, i - 1)
            add(i, i)
            if i < k - 1:
                add(i, i + 1)
            add(i, k + i)                   # coupling to b_i
            add(i, 2 * k)                   # speed column
        for i in range(k):                  # species-b rows
            r = k + i
            if i > 0:
                add(r, k + i - 1)
            add(r, k + i)
            if i < k - 1:
                add(r, k + i + 1)
            add(r, i)
            add(r, 2 * k)
        add(2 * k, mid - 1)                 # pinning row: a(0) - b(0)
        add(2 * k, k + mid - 1)
        self.rows = np.array(rows)
        self.cols = np.array(cols)

    def full_profiles(self, z):
        k = self.k
        a = np.concatenate([[self.a_eq], z[:k], [0.0]])
        b = np.concatenate([[0.0], z[k:2 * k], [self.b_eq]])
        return a, b, z[2 * k]

    def residual(self, z):
        p = self.p
        h = p.h
        k = self.k
        a, b, c = self.full_profiles(z)
        s_a, s_b = p.model.s_a, p.model.s_b
        d_a, d_b = p.model.d_a, p.model.d_b
        ai, bi = a[1:-1], b[1:-1]
        ga = self.fa - ai - s_a * bi
        gb = self.fb - bi - s_b * ai
        r = np.empty(self.n_unknowns)
        r[:k] = (d_a * (a[:-2] - 2.0 * ai + a[2:]) / h ** 2
                 + c * (a[2:] - a[:-2]) / (2.0 * h) + ai * ga)
        r[k:2 * k] = (d_b * (b[:-2] - 2.0 * bi + b[2:]) / h ** 2
                      + c * (b[2:] - b[:-2]) / (2.0 * h) + bi * gb)
        r[2 * k] = a[self.mid] - b[self.mid]
        return r

    def jacobian(self, z):
        p = self.p
        h = p.h
        k = self.k
        a, b, c = self.full_profiles(z)
        s_a, s_b = p.model.s_a, p.model.s_b
        d_a, d_b = p.model.d_a, p.model.d_b
        ai, bi = a[1:-1], b[1:-1]
        ga = self.fa - ai - s_a * bi
        gb = self.fb - bi - s_b * ai

        data = []
        off_lo_a = d_a / h ** 2 - c / (2.0 * h)
        off_hi_a = d_a / h ** 2 + c / (2.0 * h)
        off_lo_b = d_b / h ** 2 - c / (2.0 * h)
        off_hi_b = d_b / h ** 2 + c / (2.0 * h)
        dcda = (a[2:] - a[:-2]) / (2.0 * h)
        dcdb = (b[2:] - b[:-2]) / (2.0 * h)
        for i in range(k):
            if i > 0:
                data.append(off_lo_a)
            data.append(-2.0 * d_a / h ** 2 + ga[i] - ai[i])
            if i < k - 1:
                data.append(off_hi_a)
            data.append(-s_a * ai[i])
            data.append(dcda[i])
        for i in range(k):
            if i > 0:
                data.append(off_lo_b)
            data.append(-2.0 * d_b / h ** 2 + gb[i] - bi[i])
            if i < k - 1:
                data.append(off_hi_b)
            data.append(-s_b * bi[i])
            data.append(dcdb[i])
        data.append(1.0)
        data.append(-1.0)
        n = self.n_unknowns
        return csc_matrix((np.array(data), (self.rows, self.cols)),
                          shape=(n, n))


def _far_field_mismatch(problem: WaveProblem, a, b) -> float:
    a_eq, b_eq = problem.equilibria
    tail = max(2, problem.m // 10)
    return max(float(np.max(np.abs(a[:tail] - a_eq))),
               float(np.max(np.abs(b[:tail]))),
               float(np.max(np.abs(a[-tail:]))),
               float(np.max(np.abs(b[-tail:] - b_eq))))


def solve_wave_bvp(problem: WaveProblem,
                   initial_guess: Optional[WaveResult] = None,
                   max_iter: int = 60, max_widenings: int = 3,
                   estimate_condition: bool = True) -> WaveResult:
    """Newton-solve the pinned traveling-wave system at one frozen x.

    Parameters
    ----------
    problem : WaveProblem
        Frozen position, truncation length, and node count.
    initial_guess : WaveResult, optional
        A nearby converged wave for continuation; defaults to tanh fronts
        centered at y=0 with c=0.
    max_widenings : int
        The domain doubles (profiles re-interpolated) until the far-field
        mismatch drops below 1e-6; beyond this budget the truncation is
        reported as too small.

    Returns
    -------
    WaveResult
        Profiles on the final grid, speed, pinning defect, and a one-norm
        condition estimate of the last Jacobian.  A condition estimate
        beyond 1e12 emits ConditioningWarning (expected for x close to
        the window edges, where one far-field state turns marginal).

    Raises
    ------
    NonConvergenceError
        Newton residual stalls above tolerance despite step halving.
    """
    sys = _NewtonSystem(problem)
    if initial_guess is None:
        a, b, c = _tanh_guess(problem)
    else:
        a, b, c = _interp_guess(problem, initial_guess)
    z = np.concatenate([a[1:-1], b[1:-1], [c]])

    res = sys.residual(z)
    res_norm = float(np.max(np.abs(res)))
    lu = None
    iters = 0
    while res_norm > NEWTON_TOL and iters < max_iter:
        lu = splu(sys.jacobian(z))
        dz = lu.solve(-res)
        lam = 1.0
        for _ in range(20):
            z_try = z + lam * dz
            res_try = sys.residual(z_try)
            norm_try = float(np.max(np.abs(res_try)))
            if norm_try < res_norm:
                break
            lam *= 0.5
        else:
            raise NonConvergenceError(
                f"Newton stalled at x={problem.x_frozen:g}: residual "
                f"{res_norm:.3e} after {iters} iterations",
                residual=res_norm, iterations=iters)
        z, res, res_norm = z_try, res_try, norm_try
        iters += 1
    if res_norm > NEWTON_TOL:
        raise NonConvergenceError(
            f"Newton did not reach tolerance at x={problem.x_frozen:g}",
            residual=res_norm, iterations=iters)

    a, b, c = sys.full_profiles(z)
    mismatch = _far_field_mismatch(problem, a, b)
    if mismatch > FAR_FIELD_TOL:
        if max_widenings <= 0:
            raise DomainTooSmallError(
                f"far-field mismatch {mismatch:.3e} persists after domain "
                f"doubling at x={problem.x_frozen:g}")
        partial = WaveResult(
            problem.x_frozen, float(c), problem.nodes, a, b,
            float(abs(a[sys.mid] - b[sys.mid])), "bvp_newton", False,
            iters, res_norm, mismatch, problem.L)
        return solve_wave_bvp(problem.widen(), partial, max_iter,
                              max_widenings - 1, estimate_condition)

    cond = None
    if estimate_condition and lu is not None:
        jac = sys.jacobian(z)
        inv = LinearOperator(jac.shape, matvec=lu.solve,
                             rmatvec=lambda v: lu.solve(v, trans="T"))
        try:
            cond = float(onenormest(jac) * onenormest(inv))
        except Exception:
            cond = None
        if cond is not None and cond > CONDITION_WARN_THRESHOLD:
            warnings.warn(
                f"wave linearization condition ~{cond:.2e} at "
                f"x={problem.x_frozen:g}; speeds near the window edge are "
                "less trustworthy", ConditioningWarning, stacklevel=2)

    mid = sys.mid
    return WaveResult(problem.x_frozen, float(c), problem.nodes, a, b,
                      float(abs(a[mid] - b[mid])), "bvp_newton", True,
                      iters, res_norm, mismatch, problem.L,
                      condition_estimate=cond)


def front_tracking_speed(problem: WaveProblem, t_horizon: float = 30.0
                         ) -> WaveResult:
    """Independent speed estimate from the transient parabolic dynamics.

    Integrates the frozen-x system with explicit RK4 on its own coarse
    grid (spacing 0.05, Dirichlet equilibria at the ends), records the
    a=b crossing position, and fits its drift over the final third of the
    horizon.  Shares no discretization machinery with the Newton route.
    """
    a_eq, b_eq = problem.equilibria
    L = problem.L
    m = 2 * int(math.ceil(L / TRACKING_SPACING)) + 1
    y = np.linspace(-L, L, m)
    h = 2.0 * L / (m - 1)
    model = problem.model
    fa = model.f_a(problem.x_frozen)
    fb = model.f_b(problem.x_frozen)
    s_a, s_b, d_a, d_b = model.s_a, model.s_b, model.d_a, model.d_b

    a = a_eq * 0.5 * (1.0 - np.tanh(y))
    b = b_eq * 0.5 * (1.0 + np.tanh(y))
    a[0], a[-1] = a_eq, 0.0
    b[0], b[-1] = 0.0, b_eq

    def rhs(u, v):
        du = np.zeros_like(u)
        dv = np.zeros_like(v)
        du[1:-1] = (d_a * (u[:-2] - 2.0 * u[1:-1] + u[2:]) / h ** 2
                    + u[1:-1] * (fa - u[1:-1] - s_a * v[1:-1]))
        dv[1:-1] = (d_b * (v[:-2] - 2.0 * v[1:-1] + v[2:]) / h ** 2
                    + v[1:-1] * (fb - v[1:-1] - s_b * u[1:-1]))
        return du, dv

    def crossing(u, v):
        d = u - v
        idx = np.nonzero((d[:-1] > 0.0) & (d[1:] <= 0.0))[0]
        if idx.size == 0:
            raise DomainTooSmallError(
                f"front left the truncated domain at x={problem.x_frozen:g}")
        i = idx[0]
        return y[i] + h * d[i] / (d[i] - d[i + 1])

    dt = TRACKING_DT
    steps = int(round(t_horizon / dt))
    sample_every = 10
    times, positions = [], []
    for k in range(steps):
        k1a, k1b = rhs(a, b)
        k2a, k2b = rhs(a + 0.5 * dt * k1a, b + 0.5 * dt * k1b)
        k3a, k3b = rhs(a + 0.5 * dt * k2a, b + 0.5 * dt * k2b)
        k4a, k4b = rhs(a + dt * k3a, b + dt * k3b)
        a = a + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
        b = b + dt / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
        if (k + 1) % sample_every == 0:
            p = crossing(a, b)
            if abs(p) > 0.8 * L:
                raise DomainTooSmallError(
                    f"front reached {p:.2f} of half-length {L:.2f} at "
                    f"x={problem.x_frozen:g}")
            times.append((k + 1) * dt)
            positions.append(p)

    times = np.array(times)
    positions = np.array(positions)
    cut = 2 * len(times) // 3
    slope, intercept = np.polyfit(times[cut:], positions[cut:], 1)
    fit_res = float(np.max(np.abs(
        positions[cut:] - (slope * times[cut:] + intercept))))
    mid = (m - 1) // 2
    return WaveResult(problem.x_frozen, float(slope), y, a, b,
                      float(abs(a[mid] - b[mid])), "front_tracking", True,
                      steps, math.nan, _far_field_mismatch(problem, a, b),
                      L, fit_residual=fit_res)


# -- continuation and boundary location ------------------------------------


@dataclass
class SpeedMap:
    xs: np.ndarray
    cs: np.ndarray
    converged: np.ndarray
    results: List[WaveResult] = field(repr=False, default_factory=list)


class _ContinuationCache:
    """Warm-started wave solves, chaining through x in small steps."""

    def __init__(self, model: CompetitionModel, estimate_condition=False):
        self.model = model
        window = find_bistable_interval(model)
        self.window = window
        self.max_step = 0.02 * (window.upper - window.lower)
        self.estimate_condition = estimate_condition
        self.solved: dict = {}

    def speed_at(self, x: float) -> WaveResult:
        if x in self.solved:
            return self.solved[x]
        guess = None
        if self.solved:
            nearest = min(self.solved, key=lambda s: abs(s - x))
            guess = self.solved[nearest]
            # chain through intermediate solves to stay in Newton's basin
            gap = x - nearest
            n_hops = int(math.ceil(abs(gap) / self.max_step))
            for j in range(1, n_hops):
                x_hop = nearest + gap * j / n_hops
                guess = solve_wave_bvp(
                    WaveProblem(self.model, x_hop), guess,
                    estimate_condition=False)
        result = solve_wave_bvp(WaveProblem(self.model, x), guess,
                                estimate_condition=self.estimate_condition)
        self.solved[x] = result
        return result


def speed_map(model: CompetitionModel, xs) -> SpeedMap:
    """Wave speed at each sample position, warm-starting left to right."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or np.any(np.diff(xs) <= 0.0):
        raise DomainError("sample positions must be strictly increasing")
    window = find_bistable_interval(model)
    if xs[0] <= window.lower or xs[-1] >= window.upper:
        raise DomainError(
            f"samples must lie inside the open bistable window "
            f"({window.lower:g}, {window.upper:g})")
    cache = _ContinuationCache(model)
    results = []
    for x in xs:
        try:
            results.append(cache.speed_at(float(x)))
        except (NonConvergenceError, DomainTooSmallError) as exc:
            raise type(exc)(
                f"speed map failed at x={x:g}: {exc}") from exc
    cs = np.array([r.c for r in results])
    conv = np.array([r.converged for r in results])
    return SpeedMap(xs, cs, conv, results)


@dataclass
class BoundaryLocation:
    x_star: float
    bracket: Tuple[float, float]
    c_values: List[Tuple[float, float]]
    iterations: int
    at_endpoint: Optional[str] = None


def locate_boundary(model: CompetitionModel, tol_x: float = 1e-4,
                    edge_margin: float = 0.02) -> BoundaryLocation:
    """Zero of the speed map by bisection inside the bistable window.

    The speed is sampled a small margin inside each window edge (the wave
    problem degenerates at the edges themselves).  Monotonicity of c makes
    plain bisection exact; when both probes share a sign there is no
    interior zero and the boundary is reported as sitting at the
    corresponding window endpoint instead of raising.
    """
    window = find_bistable_interval(model)
    width = window.upper - window.lower
    x_lo = window.lower + edge_margin * width
    x_hi = window.upper - edge_margin * width
    cache = _ContinuationCache(model)
    c_lo = cache.speed_at(x_lo).c
    c_hi = cache.speed_at(x_hi).c

    def sampled():
        return sorted((x, r.c) for x, r in cache.solved.items())

    if c_lo <= 0.0:
        return BoundaryLocation(window.lower, (x_lo, x_hi), sampled(), 0,
                                at_endpoint="lower")
    if c_hi >= 0.0:
        return BoundaryLocation(window.upper, (x_lo, x_hi), sampled(), 0,
                                at_endpoint="upper")

    iters = 0
    while x_hi - x_lo > tol_x:
        x_mid = 0.5 * (x_lo + x_hi)
        c_mid = cache.speed_at(x_mid).c
        if c_mid > 0.0:
            x_lo = x_mid
        else:
            x_hi = x_mid
        iters += 1
    return BoundaryLocation(0.5 * (x_lo + x_hi), (x_lo, x_hi), sampled(),
                            iters)
