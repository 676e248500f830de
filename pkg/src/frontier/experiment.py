"""Vanishing-diffusion sweeps, limit classification, and ambiguity demos.

Ties the two independent routes to the boundary together: the parabolic
solver gives x*_eps per diffusion scale, the wave module gives the
predicted limit as the zero of the speed map, and the sweep report carries
the gap between them.  The zero-diffusion demo shows why the limit is the
interesting object: without diffusion every position picks a winner from
its initial data alone, and random initial conditions produce a different
patchwork on every seed, while any small diffusion collapses the same
seeds onto one reproducible front.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import isotonic_regression

from frontier.errors import (
    DomainError,
    DomainTooSmallError,
    NonConvergenceError,
    StructureError,
)
from frontier.model import (
    CompetitionModel,
    GradientSpec,
    equilibria,
    find_bistable_interval,
)
from frontier.pde import (
    Grid1D,
    StateField,
    SteadyState,
    integrate_pointwise,
    run_to_steady,
)
from frontier.wave import locate_boundary

log = logging.getLogger("frontier.experiment")

A_SHARP_INTERFACE = "a_sharp_interface"
B_DEAD_ZONE = "b_dead_zone"
C_COEXISTENCE_TAIL = "c_coexistence_tail"
INCONCLUSIVE = "inconclusive"

SUPPORT_THRESHOLD = 0.01
PROFILE_COLLAR = 5.0       # front collar in units of sqrt(eps)


# -- vanishing-diffusion sweep ---------------------------------------------


@dataclass
class SweepEntry:
    eps: float
    x_star_eps: float
    width: float
    max_slope_a: float
    residual: float
    wall_time: float
    gap: Optional[float]
    steady: SteadyState = field(repr=False, default=None)


@dataclass
class SweepReport:
    entries: List[SweepEntry]
    x_star_wave: Optional[float]
    failures: List[Tuple[float, str]]
    wave_error: Optional[str] = None

    @property
    def gaps(self) -> List[Optional[float]]:
        return [e.gap for e in self.entries]


def epsilon_sweep(model: CompetitionModel, eps_list: Sequence[float],
                  tol: float = 1e-8, dt_policy: str = "safe",
                  init="corner", with_wave: bool = True,
                  locate_tol_x: float = 1e-4, threads: int = 1
                  ) -> SweepReport:
    """Steady states over decreasing diffusion scales plus the wave limit.

    Parameters
    ----------
    model : CompetitionModel
        Must pass the hypothesis checker (the steady solver gates on it).
    eps_list : sequence of float
        Strictly decreasing, all positive; each run picks its own grid
        with at least ten nodes across the front width.
    with_wave : bool
        Also locate the zero of the wave speed map and report the gap
        |x*_eps - x*| per entry.
    threads : int
        Steady runs at distinct eps are independent; more than one thread
        runs them concurrently (results keep eps order).

    Per-eps failures are recorded and the sweep continues; the wave solve
    failing leaves x_star_wave as None with the message kept.
    """
    eps_arr = [float(e) for e in eps_list]
    if not eps_arr or any(e <= 0.0 for e in eps_arr):
        raise DomainError("diffusion scales must be positive")
    if any(b >= a for a, b in zip(eps_arr, eps_arr[1:])):
        raise DomainError("diffusion scales must be strictly decreasing")

    def run_one(eps: float):
        t0 = time.perf_counter()
        steady = run_to_steady(model, eps, init=init, tol=tol,
                               dt_policy=dt_policy)
        wall = time.perf_counter() - t0
        if steady.front is None:
            raise StructureError("steady state has no single front crossing")
        h = steady.state.grid.h
        slope = float(np.max(np.abs(np.gradient(steady.state.a, h))))
        return steady, wall, slope

    results: Dict[float, Tuple[SteadyState, float, float]] = {}
    failures: List[Tuple[float, str]] = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {eps: pool.submit(run_one, eps) for eps in eps_arr}
        for eps, fut in futures.items():
            try:
                results[eps] = fut.result()
            except (NonConvergenceError, StructureError, DomainError) as exc:
                failures.append((eps, str(exc)))
    else:
        for eps in eps_arr:
            try:
                results[eps] = run_one(eps)
            except (NonConvergenceError, StructureError, DomainError) as exc:
                failures.append((eps, str(exc)))

    x_star_wave = None
    wave_error = None
    if with_wave:
        try:
            x_star_wave = locate_boundary(model, tol_x=locate_tol_x).x_star
        except (NonConvergenceError, DomainTooSmallError) as exc:
            wave_error = str(exc)
            log.warning("wave-side boundary location failed: %s", exc)

    entries = []
    for eps in eps_arr:
        if eps not in results:
            continue
        steady, wall, slope = results[eps]
        front = steady.front
        gap = None if x_star_wave is None else abs(front.x_star_eps
                                                  - x_star_wave)
        entries.append(SweepEntry(eps, front.x_star_eps, front.width,
                                  slope, steady.residual, wall, gap, steady))
    return SweepReport(entries, x_star_wave, failures, wave_error)


def width_scaling_exponent(report: SweepReport) -> float:
    """Log-log slope of front width against eps across the sweep."""
    pts = [(e.eps, e.width) for e in report.entries if e.width > 0.0]
    if len(pts) < 2:
        raise DomainError("need at least two widths to fit a slope")
    le = np.log([p[0] for p in pts])
    lw = np.log([p[1] for p in pts])
    return float(np.polyfit(le, lw, 1)[0])


# -- limit classification --------------------------------------------------


@dataclass
class ScenarioClassification:
    verdict: str
    i_b: Tuple[float, float]       # interval where b stays below threshold
    i_a: Tuple[float, float]       # interval where a stays below threshold
    diagnostics: Dict[str, object]


def classify_limit(steady: SteadyState, model: CompetitionModel,
                   threshold: float = SUPPORT_THRESHOLD
                   ) -> ScenarioClassification:
    """Decide the geometry of the small-diffusion limit.

    Thresholds both profiles at ``threshold * f_a(0)`` and measures how the
    region without b (i_b, left) and the region without a (i_a, right) meet:
    abutting within a front collar means a sharp interface, a gap where both
    species are absent means a dead zone, and a wide band where both persist
    means a coexistence tail.  Structural sanity (b absent below the lower
    bistability threshold, a absent above the upper one) failing downgrades
    the verdict to inconclusive with diagnostics; nothing raises.
    """
    if steady.eps > 1e-3:
        raise DomainError(
            "classification needs a small-diffusion run (eps <= 1e-3)")
    grid = steady.state.grid
    x = grid.nodes
    a = steady.state.a
    b = steady.state.b
    thr = threshold * model.f_a(0.0)
    root_eps = math.sqrt(steady.eps)
    # levels near 1% sit about sqrt(eps)*log(1/threshold) outside the a=b
    # crossing, so abutting supports still overlap by a few collars
    abut_tol = (2.0 * math.log(1.0 / threshold) + 3.0) * root_eps \
        + 4.0 * grid.h

    diagnostics: Dict[str, object] = {
        "threshold_value": thr, "abut_tol": abut_tol, "notes": []}
    notes: List[str] = diagnostics["notes"]

    a_present = a >= thr
    b_present = b >= thr
    if not a_present.any() or not b_present.any():
        notes.append("a species never exceeds the presence threshold")
        return ScenarioClassification(
            INCONCLUSIVE, (0.0, 1.0), (0.0, 1.0), diagnostics)

    edge_b = float(x[int(np.argmax(b_present))])       # first b presence
    edge_a = float(x[len(x) - 1 - int(np.argmax(a_present[::-1]))])
    overlap = edge_a - edge_b
    i_b = (0.0, edge_b)
    i_a = (edge_a, 1.0)
    diagnostics.update(edge_b=edge_b, edge_a=edge_a, overlap=overlap)

    front = steady.front
    x_star = front.x_star_eps if front is not None \
        else 0.5 * (edge_a + edge_b)
    collar = PROFILE_COLLAR * root_eps
    left = x <= x_star - collar
    right = x >= x_star + collar
    fa = model.f_a(x)
    fb = model.f_b(x)
    rel_a = float(np.max(np.abs(a[left] - fa[left]) / fa[left])) \
        if left.any() else math.nan
    rel_b = float(np.max(np.abs(b[right] - fb[right]) / fb[right])) \
        if right.any() else math.nan
    diagnostics.update(x_star=x_star, max_rel_err_a=rel_a,
                       max_rel_err_b=rel_b)

    if overlap < -abut_tol:
        notes.append("both species below threshold on an interior band")
        return ScenarioClassification(B_DEAD_ZONE, i_b, i_a, diagnostics)
    if overlap > abut_tol:
        notes.append("both species above threshold on a wide band")
        return ScenarioClassification(C_COEXISTENCE_TAIL, i_b, i_a,
                                      diagnostics)

    window = find_bistable_interval(model)
    if edge_b < window.lower - abut_tol:
        notes.append(
            f"b present at x={edge_b:.4f}, below the lower bistability "
            f"threshold {window.lower:.4f}")
        return ScenarioClassification(INCONCLUSIVE, i_b, i_a, diagnostics)
    if edge_a > window.upper + abut_tol:
        notes.append(
            f"a present at x={edge_a:.4f}, above the upper bistability "
            f"threshold {window.upper:.4f}")
        return ScenarioClassification(INCONCLUSIVE, i_b, i_a, diagnostics)
    return ScenarioClassification(A_SHARP_INTERFACE, i_b, i_a, diagnostics)


# -- zero-diffusion patchwork ----------------------------------------------


EQUILIBRIUM_MATCH_TOL = 1e-6


@dataclass
class ZeroDiffusionReport:
    seed: int
    x: np.ndarray
    a0: np.ndarray
    b0: np.ndarray
    a_end: np.ndarray
    b_end: np.ndarray
    labels: List[str]
    window: Tuple[float, float]
    counts: Dict[str, int]
    window_counts: Dict[str, int]


def zero_diffusion_demo(model: CompetitionModel, seed: int = 0,
                        n_cells: int = 200, t_max: float = 300.0
                        ) -> ZeroDiffusionReport:
    """Per-cell limits of the diffusion-free dynamics from random starts.

    Each cell at x = (i + 1/2)/n_cells evolves independently from a uniform
    random state in [0, f_a(0)] x [0, f_b(1)].  The final state is labeled
    by the nearest equilibrium at that position; cells whose start sits too
    close to a basin boundary may still be moving at t_max and are labeled
    "unresolved" rather than forced into a bin.  Inside the bistable window
    generic seeds split between pure_a and pure_b: the patchwork.
    """
    rng = np.random.default_rng(seed)
    x = (np.arange(n_cells) + 0.5) / n_cells
    a0 = rng.uniform(0.0, model.f_a(0.0), n_cells)
    b0 = rng.uniform(0.0, model.f_b(1.0), n_cells)
    a_end, b_end, _, _ = integrate_pointwise(model, x, a0, b0, t_max=t_max,
                                             require_rest=False)

    window = find_bistable_interval(model)
    labels = []
    for i in range(n_cells):
        eq_set = equilibria(model, float(x[i]))
        label = "unresolved"
        candidates = [("origin", eq_set.origin), ("pure_a", eq_set.pure_a),
                      ("pure_b", eq_set.pure_b)]
        if eq_set.saddle is not None:
            candidates.append(("saddle", eq_set.saddle))
        for name, eq in candidates:
            if max(abs(a_end[i] - eq.a), abs(b_end[i] - eq.b)) \
                    <= EQUILIBRIUM_MATCH_TOL:
                label = name
                break
        labels.append(label)

    counts: Dict[str, int] = {}
    window_counts: Dict[str, int] = {}
    inside = (x > window.lower) & (x < window.upper)
    for i, lab in enumerate(labels):
        counts[lab] = counts.get(lab, 0) + 1
        if inside[i]:
            window_counts[lab] = window_counts.get(lab, 0) + 1
    return ZeroDiffusionReport(seed, x, a0, b0, a_end, b_end, labels,
                               (window.lower, window.upper), counts,
                               window_counts)


# -- paired ambiguity/disambiguation demo ----------------------------------


def demo_model() -> CompetitionModel:
    """Exponential opposing profiles with symmetric strong competition."""
    return CompetitionModel(
        gradient_a=GradientSpec.exponential(2.0, -1.0),
        gradient_b=GradientSpec.exponential(2.0 / math.e, 1.0),
        s_a=2.0, s_b=2.0)


def monotone_random_state(model: CompetitionModel, grid: Grid1D,
                          seed: int) -> StateField:
    """Uniform random profiles projected to the monotone cone."""
    rng = np.random.default_rng(seed)
    raw_a = rng.uniform(0.0, model.f_a(0.0), grid.n)
    raw_b = rng.uniform(0.0, model.f_b(1.0), grid.n)
    a0 = isotonic_regression(raw_a, increasing=False).x
    b0 = isotonic_regression(raw_b, increasing=True).x
    return StateField(grid, np.asarray(a0, dtype=float),
                      np.asarray(b0, dtype=float))


@dataclass
class DisambiguationReport:
    eps: float
    seeds: Tuple[int, ...]
    patchworks: List[ZeroDiffusionReport]
    steadies: List[SteadyState] = field(repr=False, default_factory=list)
    fronts: List[float] = field(default_factory=list)
    x_star_wave: Optional[float] = None
    steady_disagreement: float = math.nan
    plot_paths: List[str] = field(default_factory=list)


def disambiguation_demo(model: Optional[CompetitionModel] = None,
                        eps: float = 1e-5, seeds: Sequence[int] = (0, 1),
                        n_cells: int = 200, t_max_zero: float = 300.0,
                        tol: float = 1e-8, dt_policy: str = "safe",
                        out_dir: Optional[str] = None
                        ) -> DisambiguationReport:
    """Zero-diffusion patchworks versus diffusive steady states, per seed.

    Runs the diffusion-free patchwork and a full parabolic solve from a
    random monotone initial state for each seed, then compares: the
    patchworks differ seed to seed while the steady states coincide, with
    the front at the wave-predicted boundary.  With ``out_dir`` set, two
    SVG panels are written (deterministic output for fixed seeds).

    The grid follows the resolution rule for ``eps``; an under-resolved
    explicit grid is refused upstream with the required node count.
    """
    if model is None:
        model = demo_model()
    seeds = tuple(int(s) for s in seeds)
    log.info("patchwork runs at eps=0, seeds=%s", seeds)
    patchworks = [zero_diffusion_demo(model, seed, n_cells, t_max_zero)
                  for seed in seeds]

    grid = Grid1D.for_diffusion(eps)
    steadies = []
    for seed in seeds:
        init = monotone_random_state(model, grid, seed)
        log.info("steady run at eps=%g from monotone random seed %d",
                 eps, seed)
        steadies.append(run_to_steady(model, eps, grid=grid, init=init,
                                      tol=tol, dt_policy=dt_policy))
    fronts = [s.front.x_star_eps for s in steadies if s.front is not None]

    disagreement = math.nan
    if len(steadies) >= 2:
        base = steadies[0].state
        disagreement = 0.0
        for other in steadies[1:]:
            disagreement = max(
                disagreement,
                float(np.max(np.abs(other.state.a - base.a))),
                float(np.max(np.abs(other.state.b - base.b))))

    x_star_wave = locate_boundary(model).x_star

    report = DisambiguationReport(eps, seeds, patchworks, steadies, fronts,
                                  x_star_wave, disagreement)
    if out_dir is not None:
        report.plot_paths = _write_demo_plots(report, model, out_dir)
    return report


def _write_demo_plots(report: DisambiguationReport,
                      model: CompetitionModel, out_dir: str) -> List[str]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "frontier"
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    fig, axes = plt.subplots(len(report.patchworks), 1, sharex=True,
                             figsize=(6.0, 2.2 * len(report.patchworks)),
                             squeeze=False)
    for ax, pw in zip(axes[:, 0], report.patchworks):
        ax.plot(pw.x, pw.a_end, ".", ms=3, label="a")
        ax.plot(pw.x, pw.b_end, ".", ms=3, label="b")
        for edge in pw.window:
            ax.axvline(edge, color="gray", lw=0.6, ls=":")
        ax.set_ylabel(f"seed {pw.seed}")
    axes[0, 0].legend(loc="upper right", fontsize=8)
    axes[-1, 0].set_xlabel("x")
    fig.suptitle("no diffusion: per-cell limits from random starts")
    paths.append(_atomic_savefig(fig, os.path.join(out_dir,
                                                   "patchwork.svg")))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    for steady in report.steadies:
        x = steady.state.grid.nodes
        ax.plot(x, steady.state.a, lw=1.0)
        ax.plot(x, steady.state.b, lw=1.0)
    if report.x_star_wave is not None:
        ax.axvline(report.x_star_wave, color="k", lw=0.8, ls="--",
                   label="wave-predicted boundary")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("x")
    ax.set_ylabel("steady profiles")
    ax.set_title(f"eps={report.eps:g}: one front, all seeds")
    paths.append(_atomic_savefig(fig, os.path.join(out_dir,
                                                   "steady_front.svg")))
    plt.close(fig)
    return paths


def _atomic_savefig(fig, path: str) -> str:
    tmp = path + ".tmp"
    fig.savefig(tmp, format="svg", metadata={"Date": None})
    os.replace(tmp, path)
    return path
