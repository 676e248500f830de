"""Parabolic solver on [0, 1]: Robin boundaries, IMEX marching, diagnostics.

The system

    da/dt = eps*d_a * a'' + a * g_a(x, a, b)
    db/dt = eps*d_b * b'' + b * g_b(x, a, b)

carries Robin conditions  u(0) - sqrt(eps) u'(0) = g_left  and
u(1) + sqrt(eps) u'(1) = g_right, with data (f_a(0), 0) for the first
species and (0, f_b(1)) for the second.  Diffusion is implicit
(tridiagonal solve), reaction explicit with a positivity clamp, and the
step size adapts under invariant monitors: bounds always, spatial
monotonicity when the start is monotone, temporal monotonicity when the
start is the invading corner (a=0, b=f_b(1)).  The zero-diffusion system
degenerates to independent per-node planar ODEs and takes a separate
Runge-Kutta path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

from frontier.errors import (
    DomainError,
    HypothesisError,
    InvariantViolation,
    NonConvergenceError,
    ResolutionError,
    StructureError,
)
from frontier.model import CompetitionModel, verify_hypotheses

POINTS_PER_FRONT = 10  # grid nodes across the sqrt(eps) front width


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [0, 1] with n >= 3 nodes."""

    n: int

    def __post_init__(self):
        if self.n < 3:
            raise DomainError("grid needs at least 3 nodes")

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)

    @staticmethod
    def required_nodes(eps: float) -> int:
        """Smallest n with h <= sqrt(eps)/POINTS_PER_FRONT."""
        if not (eps > 0.0):
            raise DomainError("resolution rule needs eps > 0")
        return int(math.ceil(1.0 + POINTS_PER_FRONT / math.sqrt(eps)))

    @classmethod
    def for_diffusion(cls, eps: float) -> "Grid1D":
        return cls(cls.required_nodes(eps))

    def resolves(self, eps: float) -> bool:
        return self.n >= self.required_nodes(eps)


@dataclass
class StateField:
    """Concentration pair on a grid at elapsed time t."""

    grid: Grid1D
    a: np.ndarray
    b: np.ndarray
    t: float = 0.0

    def copy(self) -> "StateField":
        return StateField(self.grid, self.a.copy(), self.b.copy(), self.t)


class RobinOperator:
    """Second-order discretization of u -> eps*d*u'' under Robin data.

    Ghost nodes are eliminated with the boundary relations
    u(0) - sqrt(eps) u'(0) = left and u(1) + sqrt(eps) u'(1) = right,
    which folds the data into an affine term.  ``apply`` returns the full
    affine action M u + f; the diagonals and ``affine`` are exposed for
    implicit time stepping.
    """

    def __init__(self, grid: Grid1D, eps: float, d: float,
                 boundary_values: tuple):
        if not (eps > 0.0):
            raise DomainError(
                "Robin assembly needs eps > 0; zero diffusion follows the "
                "pointwise path")
        if not (d > 0.0):
            raise DomainError("diffusivity must be positive")
        self.grid = grid
        self.eps = float(eps)
        self.d = float(d)
        self.left, self.right = (float(v) for v in boundary_values)
        n, h = grid.n, grid.h
        root = math.sqrt(eps)
        k = eps * d / h ** 2

        main = np.full(n, -2.0 * k)
        upper = np.full(n - 1, k)
        lower = np.full(n - 1, k)
        # boundary rows from ghost-node elimination
        main[0] = -2.0 * k * (1.0 + h / root)
        upper[0] = 2.0 * k
        main[-1] = -2.0 * k * (1.0 + h / root)
        lower[-1] = 2.0 * k
        self.main, self.upper, self.lower = main, upper, lower

        self.affine = np.zeros(n)
        self.affine[0] = 2.0 * d * root / h * self.left
        self.affine[-1] = 2.0 * d * root / h * self.right

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = self.main * u
        out[:-1] += self.upper * u[1:]
        out[1:] += self.lower * u[:-1]
        return out + self.affine

    def implicit_factor(self, dt: float):
        """Factorization of (I - dt M) for the implicit diffusion stage."""
        n = self.grid.n
        diag = 1.0 - dt * self.main
        data = np.concatenate([-dt * self.lower, diag, -dt * self.upper])
        rows = np.concatenate([np.arange(1, n), np.arange(n),
                               np.arange(0, n - 1)])
        cols = np.concatenate([np.arange(0, n - 1), np.arange(n),
                               np.arange(1, n)])
        return splu(csc_matrix((data, (rows, cols)), shape=(n, n)))


def assemble_robin_operator(grid: Grid1D, eps: float, d: float,
                            boundary_values: tuple) -> RobinOperator:
    """Build the discrete diffusion operator with its affine Robin data."""
    return RobinOperator(grid, eps, d, boundary_values)


# -- stepping --------------------------------------------------------------


BOUND_TOL = 1e-9
SPACE_TOL_FACTOR = 1e-9   # times f_a(0)
TIME_TOL = 1e-9


@dataclass
class MonitorStats:
    """Worst-case slack of each invariant over accepted steps."""

    bound_excess: float = 0.0
    space_slip: float = 0.0
    time_slip: float = 0.0
    rejected_steps: int = 0
    space_checked: bool = False
    time_checked: bool = False


class ImexStepper:
    """Implicit-diffusion / explicit-reaction marcher for one model.

    Owns the two Robin operators and caches the sparse factorizations,
    which are rebuilt only when dt changes.  The reaction stage multiplies
    each species by 1 + dt*g, switching to exp(dt*g) on nodes where the
    linear factor would turn negative, so nonnegativity is exact.
    """

    def __init__(self, model: CompetitionModel, grid: Grid1D, eps: float):
        self.model = model
        self.grid = grid
        self.eps = float(eps)
        self.x = grid.nodes
        self.fa = np.asarray(model.gradient_a(self.x), dtype=float)
        self.fb = np.asarray(model.gradient_b(self.x), dtype=float)
        self.op_a = assemble_robin_operator(
            grid, eps, model.d_a, (model.f_a(0.0), 0.0))
        self.op_b = assemble_robin_operator(
            grid, eps, model.d_b, (0.0, model.f_b(1.0)))
        self._dt = None
        self._lu_a = None
        self._lu_b = None

    def growth(self, a: np.ndarray, b: np.ndarray):
        return (self.fa - a - self.model.s_a * b,
                self.fb - b - self.model.s_b * a)

    def residual(self, a: np.ndarray, b: np.ndarray, ga=None, gb=None):
        """Stationary defects eps*d*u'' + u*g, nodewise."""
        if ga is None or gb is None:
            ga, gb = self.growth(a, b)
        return self.op_a.apply(a) + a * ga, self.op_b.apply(b) + b * gb

    def refactor(self, dt: float) -> None:
        self._dt = dt
        self._lu_a = self.op_a.implicit_factor(dt)
        self._lu_b = self.op_b.implicit_factor(dt)

    def step(self, a: np.ndarray, b: np.ndarray, dt: float, ga=None, gb=None):
        """One IMEX step; both species advance from the same time level."""
        if dt <= 0.0:
            raise DomainError("dt must be positive")
        if dt != self._dt:
            self.refactor(dt)
        if ga is None or gb is None:
            ga, gb = self.growth(a, b)
        lin_a = 1.0 + dt * ga
        lin_b = 1.0 + dt * gb
        fac_a = np.where(lin_a >= 0.0, lin_a, np.exp(dt * ga))
        fac_b = np.where(lin_b >= 0.0, lin_b, np.exp(dt * gb))
        new_a = self._lu_a.solve(a * fac_a + dt * self.op_a.affine)
        new_b = self._lu_b.solve(b * fac_b + dt * self.op_b.affine)
        return new_a, new_b


def step_parabolic(state: StateField, model: CompetitionModel, eps: float,
                   dt: float, strict: bool = True) -> StateField:
    """Advance one IMEX step, checking bounds when strict.

    One-shot convenience around :class:`ImexStepper`; marching loops
    should hold a stepper to keep factorization reuse.
    """
    stepper = ImexStepper(model, state.grid, eps)
    new_a, new_b = stepper.step(state.a, state.b, dt)
    if strict:
        cap_a = model.f_a(0.0)
        cap_b = model.f_b(1.0)
        excess = max(
            float(np.max(-new_a, initial=0.0)),
            float(np.max(-new_b, initial=0.0)),
            float(np.max(new_a - cap_a, initial=0.0)),
            float(np.max(new_b - cap_b, initial=0.0)))
        if excess > BOUND_TOL:
            raise InvariantViolation(
                f"bound excess {excess:.3e} after one step")
    return StateField(state.grid, new_a, new_b, state.t + dt)


@dataclass(frozen=True)
class FrontEstimate:
    x_star_eps: float
    width: float


def front_position(state: StateField, scale: Optional[float] = None
                   ) -> FrontEstimate:
    """Locate the single a=b crossing and the coexistence width around it.

    The difference a-b must change sign exactly once (monotone states
    guarantee this); the crossing is linearly interpolated between the
    bracketing nodes.  Width is the extent of |a-b| < 0.1*scale around
    the crossing, edges interpolated; scale defaults to the larger field
    maximum.
    """
    x = state.grid.nodes
    diff = state.a - state.b
    if scale is None:
        scale = max(float(np.max(state.a)), float(np.max(state.b)))
    if diff[0] <= 0.0 or diff[-1] >= 0.0:
        raise StructureError("state is not a-dominant left, b-dominant right")
    sign_flips = np.nonzero(np.diff(np.sign(diff)) != 0)[0]
    # a zero node produces two flips around it; collapse runs
    crossings = []
    for i in sign_flips:
        if not crossings or i > crossings[-1] + 1:
            crossings.append(i)
    if len(crossings) != 1:
        raise StructureError(
            f"expected one a=b crossing, found {len(crossings)}")
    i = crossings[0]
    frac = diff[i] / (diff[i] - diff[i + 1])
    x_star = x[i] + frac * state.grid.h

    thr = 0.1 * scale
    inside = np.abs(diff) < thr
    if not inside.any():
        return FrontEstimate(float(x_star), 0.0)
    lo = int(np.argmax(inside))
    hi = int(len(inside) - 1 - np.argmax(inside[::-1]))
    left = x[lo]
    if lo > 0:
        f = (np.abs(diff[lo - 1]) - thr) / (np.abs(diff[lo - 1])
                                            - np.abs(diff[lo]))
        left = x[lo - 1] + f * state.grid.h
    right = x[hi]
    if hi < len(x) - 1:
        f = (np.abs(diff[hi + 1]) - thr) / (np.abs(diff[hi + 1])
                                            - np.abs(diff[hi]))
        right = x[hi + 1] - f * state.grid.h
    return FrontEstimate(float(x_star), float(right - left))


@dataclass
class SteadyState:
    state: StateField
    residual: float
    residual_a: np.ndarray
    residual_b: np.ndarray
    iterations: int
    front: Optional[FrontEstimate]
    monitors: MonitorStats
    eps: float
    dt_final: float


DT_POLICIES = {"safe": 0.1, "aggressive": 0.3}
_DT_GROWTH_INTERVAL = 10   # accepted steps between dt doublings
_DT_MIN_FACTOR = 2.0 ** -20


def initial_state(model: CompetitionModel, grid: Grid1D, init) -> StateField:
    """Build a start state: 'corner', 'ramp', or a StateField to copy."""
    if isinstance(init, StateField):
        if init.grid.n != grid.n:
            raise DomainError("custom initial state is on a different grid")
        return init.copy()
    x = grid.nodes
    if init == "corner":
        # invading corner: no a anywhere, b at its right-boundary cap
        return StateField(grid, np.zeros(grid.n),
                          np.full(grid.n, model.f_b(1.0)), 0.0)
    if init == "ramp":
        return StateField(grid, model.f_a(0.0) * (1.0 - x),
                          model.f_b(1.0) * x, 0.0)
    raise DomainError(f"unknown initial condition {init!r}")


def run_to_steady(model: CompetitionModel, eps: float,
                  grid: Optional[Grid1D] = None, init="corner",
                  tol: float = 1e-8, dt_policy: str = "safe",
                  max_steps: int = 500_000, strict: bool = True,
                  t_max_zero_diffusion: float = 500.0) -> SteadyState:
    """March the parabolic system to its stationary profile.

    Parameters
    ----------
    model : CompetitionModel
        Must pass every hypothesis check unless ``strict`` is off.
    eps : float
        Diffusion scale; 0 selects the pointwise per-node ODE path.
    grid : Grid1D, optional
        Defaults to the finest rule h <= sqrt(eps)/10; a coarser grid is
        refused with the required node count.
    init : str or StateField
        'corner' (a=0, b=f_b(1)), 'ramp', or an explicit state.
    tol : float
        Max-norm stationary-residual target.
    dt_policy : str
        'safe' caps dt at 0.1/|g|_max, 'aggressive' at 0.3/|g|_max.

    Returns
    -------
    SteadyState
        Converged state, nodewise residuals, front estimate (None when
        the state has no single crossing), and monitor statistics.

    Notes
    -----
    Monitors run on every accepted step: bounds within 1e-9 always;
    spatial monotonicity within 1e-9*f_a(0) when the start is monotone;
    temporal monotonicity (a up, b down, within 1e-9) for the corner
    start.  A violated monitor rejects the step and halves dt.
    """
    if strict:
        report = verify_hypotheses(model)
        if not report.all_passed:
            codes = ", ".join(c.code for c in report.failed())
            first = report.failed()[0]
            raise HypothesisError(
                f"model fails hypothesis checks: {codes}",
                code=first.code, location=first.first_violation)

    if eps == 0.0:
        return _run_pointwise(model, grid, init, tol, t_max_zero_diffusion)
    if eps < 0.0:
        raise DomainError("eps must be nonnegative")

    if grid is None:
        grid = Grid1D.for_diffusion(eps)
    elif not grid.resolves(eps):
        need = Grid1D.required_nodes(eps)
        raise ResolutionError(
            f"grid too coarse for eps={eps:g}: need n >= {need}",
            required_nodes=need)

    state = initial_state(model, grid, init)
    cap_a = model.f_a(0.0)
    cap_b = model.f_b(1.0)
    stats = MonitorStats()
    stats.space_checked = bool(
        np.all(np.diff(state.a) <= SPACE_TOL_FACTOR * cap_a)
        and np.all(np.diff(state.b) >= -SPACE_TOL_FACTOR * cap_a))
    stats.time_checked = init == "corner"
    space_tol = SPACE_TOL_FACTOR * cap_a

    stepper = ImexStepper(model, grid, eps)
    dt_cap = DT_POLICIES[dt_policy] / model.reaction_bound()
    dt = dt_cap / 16.0
    dt_min = dt_cap * _DT_MIN_FACTOR
    a, b = state.a, state.b
    t = state.t
    accepted = 0
    streak = 0
    res_inf = math.inf

    while accepted < max_steps:
        ga, gb = stepper.growth(a, b)
        ra, rb = stepper.residual(a, b, ga, gb)
        res_inf = max(float(np.max(np.abs(ra))), float(np.max(np.abs(rb))))
        if res_inf <= tol:
            final = StateField(grid, a, b, t)
            try:
                front = front_position(final, scale=cap_a)
            except StructureError:
                front = None
            return SteadyState(final, res_inf, ra, rb, accepted, front,
                               stats, eps, dt)

        new_a, new_b = stepper.step(a, b, dt, ga, gb)

        excess = max(
            float(np.max(-new_a, initial=0.0)),
            float(np.max(-new_b, initial=0.0)),
            float(np.max(new_a - cap_a, initial=0.0)),
            float(np.max(new_b - cap_b, initial=0.0)))
        slip_space = 0.0
        if stats.space_checked:
            slip_space = max(
                float(np.max(np.diff(new_a), initial=0.0)),
                float(np.max(-np.diff(new_b), initial=0.0)))
        slip_time = 0.0
        if stats.time_checked:
            slip_time = max(
                float(np.max(a - new_a, initial=0.0)),
                float(np.max(new_b - b, initial=0.0)))

        if excess > BOUND_TOL or slip_space > space_tol \
                or slip_time > TIME_TOL:
            stats.rejected_steps += 1
            streak = 0
            dt *= 0.5
            if dt < dt_min:
                raise NonConvergenceError(
                    "invariant monitors reject steps down to the minimum dt",
                    residual=res_inf, iterations=accepted)
            continue

        stats.bound_excess = max(stats.bound_excess, excess)
        stats.space_slip = max(stats.space_slip, slip_space)
        stats.time_slip = max(stats.time_slip, slip_time)
        a, b = new_a, new_b
        t += dt
        accepted += 1
        streak += 1
        if dt < dt_cap and streak % _DT_GROWTH_INTERVAL == 0:
            dt = min(2.0 * dt, dt_cap)

    raise NonConvergenceError(
        f"no steady state within {max_steps} steps", residual=res_inf,
        iterations=accepted)


# -- zero diffusion --------------------------------------------------------


ZERO_DIFFUSION_DT = 1e-3


def _pointwise_rhs(fa, fb, model, a, b):
    return (a * (fa - a - model.s_a * b), b * (fb - b - model.s_b * a))


def integrate_pointwise(model: CompetitionModel, x: np.ndarray,
                        a0: np.ndarray, b0: np.ndarray, tol: float = 1e-8,
                        t_max: float = 500.0, dt: float = ZERO_DIFFUSION_DT,
                        require_rest: bool = True):
    """Run the decoupled per-node planar ODEs to rest with fixed-step RK4.

    Returns (a, b, t, residual) where residual is the max-norm of the
    vector field at the final state.  If the field is still moving at
    t_max, raises NonConvergenceError unless ``require_rest`` is off
    (nodes near a stability threshold relax arbitrarily slowly).
    """
    fa = np.asarray(model.gradient_a(x), dtype=float)
    fb = np.asarray(model.gradient_b(x), dtype=float)
    a = np.asarray(a0, dtype=float).copy()
    b = np.asarray(b0, dtype=float).copy()
    steps = int(round(t_max / dt))
    check_every = 100
    res = math.inf
    for k in range(steps):
        k1a, k1b = _pointwise_rhs(fa, fb, model, a, b)
        k2a, k2b = _pointwise_rhs(fa, fb, model, a + 0.5 * dt * k1a,
                                  b + 0.5 * dt * k1b)
        k3a, k3b = _pointwise_rhs(fa, fb, model, a + 0.5 * dt * k2a,
                                  b + 0.5 * dt * k2b)
        k4a, k4b = _pointwise_rhs(fa, fb, model, a + dt * k3a, b + dt * k3b)
        a = a + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
        b = b + dt / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
        if (k + 1) % check_every == 0:
            ra, rb = _pointwise_rhs(fa, fb, model, a, b)
            res = max(float(np.max(np.abs(ra))), float(np.max(np.abs(rb))))
            if res <= tol:
                return a, b, (k + 1) * dt, res
    ra, rb = _pointwise_rhs(fa, fb, model, a, b)
    res = max(float(np.max(np.abs(ra))), float(np.max(np.abs(rb))))
    if res <= tol or not require_rest:
        return a, b, steps * dt, res
    raise NonConvergenceError(
        f"pointwise dynamics still moving at t={t_max:g}", residual=res)


def _run_pointwise(model, grid, init, tol, t_max) -> SteadyState:
    if grid is None:
        grid = Grid1D(201)
    state = initial_state(model, grid, init)
    a, b, t, res = integrate_pointwise(
        model, grid.nodes, state.a, state.b, tol=tol, t_max=t_max)
    final = StateField(grid, a, b, t)
    try:
        front = front_position(final, scale=model.f_a(0.0))
    except StructureError:
        front = None
    ra, rb = _pointwise_rhs(
        np.asarray(model.gradient_a(grid.nodes), dtype=float),
        np.asarray(model.gradient_b(grid.nodes), dtype=float),
        model, a, b)
    stats = MonitorStats()
    return SteadyState(final, res, ra, rb, int(round(t / ZERO_DIFFUSION_DT)),
                       front, stats, 0.0, ZERO_DIFFUSION_DT)


# -- diagnostics -----------------------------------------------------------


WKB_FLOOR = 1e-280


@dataclass
class WkbField:
    grid: Grid1D
    phi_a: np.ndarray
    phi_b: np.ndarray
    eikonal_residual_a: np.ndarray
    eikonal_residual_b: np.ndarray
    floored_a: bool
    floored_b: bool


def wkb_transform(state: StateField, model: CompetitionModel, eps: float,
                  allow_floor: bool = True) -> WkbField:
    """Logarithmic phase fields and their pointwise eikonal defects.

    phi = -sqrt(eps)*log(u) turns exponentially small tails into order-one
    phases; at an exact steady state with unit diffusivity the identity
    |phi'|^2 - sqrt(eps) phi'' + g = 0 holds pointwise, so the returned
    residuals measure discretization plus distance from steadiness.
    Values below 1e-280 are floored (flagged) to keep the log finite.
    """
    if not (eps > 0.0):
        raise DomainError("wkb transform needs eps > 0")
    root = math.sqrt(eps)
    h = state.grid.h
    x = state.grid.nodes

    def phase(u):
        floored = bool(np.any(u < WKB_FLOOR))
        if floored and not allow_floor:
            raise DomainError(
                "state has non-positive or underflowing values; pass "
                "allow_floor=True for diagnostic flooring")
        return -root * np.log(np.maximum(u, WKB_FLOOR)), floored

    phi_a, fl_a = phase(state.a)
    phi_b, fl_b = phase(state.b)
    ga, gb = (model.gradient_a(x) - state.a - model.s_a * state.b,
              model.gradient_b(x) - state.b - model.s_b * state.a)

    def residual(phi, g):
        dphi = np.gradient(phi, h, edge_order=2)
        d2 = np.empty_like(phi)
        d2[1:-1] = (phi[:-2] - 2.0 * phi[1:-1] + phi[2:]) / h ** 2
        d2[0] = d2[1]
        d2[-1] = d2[-2]
        return dphi ** 2 - root * d2 + g

    return WkbField(state.grid, phi_a, phi_b,
                    residual(phi_a, ga), residual(phi_b, gb), fl_a, fl_b)


@dataclass
class SubsolutionProfile:
    """Explicit exponential lower barrier for the first species.

    The profile alpha*e^(x*sqrt(mu/eps)) + beta_eps*e^(-x*sqrt(mu/eps))
    solves eps*phi'' = mu*phi under the species-a Robin data, where
    d_a*mu is the worst-case decay pressure on species a at the right
    boundary (opposing species at full strength).  beta_limit is the
    eps->0 limit of beta_eps; delta = phi(0) bounds the steady left-edge
    concentration from below uniformly in eps.
    """

    eps: float
    mu: float
    applicable: bool
    alpha: float = 0.0
    beta_eps: float = 0.0
    beta_limit: float = 0.0
    delta: float = 0.0
    eps_threshold: float = 0.0
    _ratio: float = field(default=0.0, repr=False)

    def __call__(self, x):
        if not self.applicable:
            raise DomainError("barrier not defined: decay rate mu <= 0")
        q = math.sqrt(self.mu / self.eps)
        xx = np.asarray(x, dtype=float)
        # alpha*e^(xq) written with a non-positive exponent to survive
        # machine-large q
        out = self.beta_eps * (self._ratio * np.exp((xx - 2.0) * q)
                               + np.exp(-xx * q))
        return float(out) if np.isscalar(x) else out


def subsolution_profile(model: CompetitionModel, eps: float,
                        n_scan: int = 201) -> SubsolutionProfile:
    """Closed-form lower barrier for species a at diffusion scale eps.

    mu = -min over s in [0, f_a(0)] of g_a(1, s, f_b(1)), divided by d_a.
    When that minimum is nonnegative the barrier is unneeded and the
    result is flagged inapplicable rather than raising.
    """
    if not (eps > 0.0):
        raise DomainError("barrier needs eps > 0")
    cap = model.f_a(0.0)
    s = np.linspace(0.0, cap, n_scan)
    worst = float(np.min(model.f_a(1.0) - s - model.s_a * model.f_b(1.0)))
    mu = -worst / model.d_a
    if mu <= 0.0:
        return SubsolutionProfile(eps=eps, mu=mu, applicable=False)

    rmu = math.sqrt(mu)
    ratio = (rmu - 1.0) / (rmu + 1.0)
    q = math.sqrt(mu / eps)
    e2 = math.exp(-2.0 * q)
    beta_eps = cap / (rmu + 1.0) / (1.0 - ratio ** 2 * e2)
    alpha = beta_eps * ratio * e2
    beta_limit = cap / (rmu + 1.0)
    prof = SubsolutionProfile(
        eps=eps, mu=mu, applicable=True, alpha=alpha, beta_eps=beta_eps,
        beta_limit=beta_limit, _ratio=ratio)
    prof.delta = float(prof(0.0))
    prof.eps_threshold = _positivity_threshold(mu, cap)
    return prof


def _positivity_threshold(mu, cap) -> float:
    """Largest dyadic eps such that the barrier stays in (0, cap] on a
    dense sample for every scanned eps at or below it."""
    xs = np.linspace(0.0, 1.0, 257)
    rmu = math.sqrt(mu)
    ratio = (rmu - 1.0) / (rmu + 1.0)
    good = 0.0
    for k in range(40, -1, -1):          # eps ascending: 2^-40 .. 1
        eps = 2.0 ** -k
        q = math.sqrt(mu / eps)
        e2 = math.exp(-2.0 * q)
        beta_eps = cap / (rmu + 1.0) / (1.0 - ratio ** 2 * e2)
        # sign test factored as e^(-xq) * (1 + ratio*e^(2(x-1)q)) so that
        # tail underflow cannot masquerade as a sign change
        signs = 1.0 + ratio * np.exp(2.0 * (xs - 1.0) * q)
        vals = beta_eps * (ratio * np.exp((xs - 2.0) * q) + np.exp(-xs * q))
        if beta_eps > 0.0 and np.all(signs > 0.0) \
                and np.all(vals <= cap + 1e-12):
            good = eps
        else:
            break
    return good
