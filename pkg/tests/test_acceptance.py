"""Acceptance gate: ten criteria, one pass/fail line each.

Each test prints exactly one [PASS]/[FAIL] line with the measured numbers
and then asserts.  Expensive runs come from the session fixtures so the
whole gate stays inside its runtime budgets.
"""

import math
import time

import numpy as np

from frontier.model import (
    equilibria,
    equilibrium_derivatives,
    evaluate_reaction,
    find_bistable_interval,
)
from frontier.pde import Grid1D, run_to_steady
from frontier.wave import (
    WaveProblem,
    front_tracking_speed,
    solve_wave_bvp,
    speed_map,
)
from frontier.experiment import (
    A_SHARP_INTERFACE,
    classify_limit,
    width_scaling_exponent,
)


def report(number: int, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    assert ok, detail


def test_criterion_01_bistable_interval(reference_model):
    find_bistable_interval(reference_model)       # warm cache effects
    t0 = time.perf_counter()
    window = find_bistable_interval(reference_model)
    elapsed = time.perf_counter() - t0
    err = max(abs(window.lower - 2.0 / 9.0), abs(window.upper - 7.0 / 9.0))
    ok = err <= 1e-10 and elapsed < 1e-3
    report(1, ok, f"(x_b, x_a) off by {err:.2e} (tol 1e-10), "
                  f"{elapsed * 1e6:.0f} us (< 1 ms)")


def test_criterion_02_equilibrium_closed_forms(reference_model):
    rng = np.random.default_rng(2024)
    window = find_bistable_interval(reference_model)
    xs = rng.uniform(window.lower + 1e-6, window.upper - 1e-6, 100)
    t0 = time.perf_counter()
    worst_residual = 0.0
    worst_det = -math.inf
    worst_deriv = 0.0
    step = 1e-6
    for x in xs:
        saddle = equilibria(reference_model, float(x)).saddle
        ev = evaluate_reaction(reference_model, float(x), saddle.a,
                               saddle.b)
        worst_residual = max(worst_residual, abs(ev.g_a) + abs(ev.g_b))
        det = np.prod(saddle.eigenvalues).real
        worst_det = max(worst_det, det)
        d = equilibrium_derivatives(reference_model, float(x))
        lo = equilibria(reference_model, float(x) - step)
        hi = equilibria(reference_model, float(x) + step)
        fd = ((hi.saddle.a - lo.saddle.a) / (2 * step),
              (hi.saddle.b - lo.saddle.b) / (2 * step),
              (hi.pure_a.a - lo.pure_a.a) / (2 * step),
              (hi.pure_b.b - lo.pure_b.b) / (2 * step))
        worst_deriv = max(worst_deriv,
                          abs(d.saddle_a - fd[0]), abs(d.saddle_b - fd[1]),
                          abs(d.pure_a - fd[2]), abs(d.pure_b - fd[3]))
    elapsed = time.perf_counter() - t0
    ok = (worst_residual <= 1e-12 and worst_det < 0.0
          and worst_deriv <= 1e-6 and elapsed < 0.1)
    report(2, ok, f"saddle residual {worst_residual:.1e} (tol 1e-12), "
                  f"max det {worst_det:.2e} (< 0), derivative mismatch "
                  f"{worst_deriv:.1e} (tol 1e-6), {elapsed * 1e3:.0f} ms "
                  f"(< 100 ms)")


def test_criterion_03_symmetry_oracle(reference_model, reference_sweep):
    t0 = time.perf_counter()
    c_mid = solve_wave_bvp(WaveProblem(reference_model, 0.5),
                           estimate_condition=False).c
    bvp_time = time.perf_counter() - t0
    locate_err = abs(reference_sweep.x_star_wave - 0.5)
    front_errs = []
    for entry in reference_sweep.entries:
        h = entry.steady.state.grid.h
        tol = 2 * h + math.sqrt(entry.eps)
        front_errs.append((abs(entry.x_star_eps - 0.5), tol))
    elapsed = reference_sweep.elapsed + bvp_time
    ok = (abs(c_mid) <= 1e-5 and locate_err <= 1e-4
          and all(err <= tol for err, tol in front_errs)
          and len(front_errs) == 3 and elapsed < 120.0)
    worst = max(err / tol for err, tol in front_errs)
    report(3, ok, f"c(0.5) = {c_mid:.2e} (tol 1e-5), locate off by "
                  f"{locate_err:.2e} (tol 1e-4), steady fronts within "
                  f"{worst:.2f}x of 2h+sqrt(eps), {elapsed:.0f} s "
                  f"(< 120 s)")


def test_criterion_04_speed_monotonicity(reference_model,
                                         asymmetric_model):
    t0 = time.perf_counter()
    win_ref = find_bistable_interval(reference_model)
    xs_ref = np.linspace(win_ref.lower, win_ref.upper, 11)[1:-1]
    map_ref = speed_map(reference_model, xs_ref)
    win_asym = find_bistable_interval(asymmetric_model)
    xs_asym = np.linspace(win_asym.lower, win_asym.upper, 11)[1:-1]
    map_asym = speed_map(asymmetric_model, xs_asym)
    elapsed = time.perf_counter() - t0
    dec_ref = bool(np.all(np.diff(map_ref.cs) < 0))
    dec_asym = bool(np.all(np.diff(map_asym.cs) < 0))
    # xs_ref is symmetric about 0.5, so reversed entries mirror x -> 1-x
    anti = float(np.max(np.abs(map_ref.cs + map_ref.cs[::-1])))
    ok = dec_ref and dec_asym and anti <= 2e-5 and elapsed < 60.0
    report(4, ok, f"strictly decreasing on both models "
                  f"({dec_ref}/{dec_asym}), antisymmetry defect "
                  f"{anti:.1e} (tol 2e-5), {elapsed:.1f} s (< 60 s)")


def test_criterion_05_cross_solver_oracle(reference_model):
    t0 = time.perf_counter()
    worst = 0.0
    for x in (0.3, 0.4, 0.5, 0.6, 0.7):
        problem = WaveProblem(reference_model, x)
        c_bvp = solve_wave_bvp(problem, estimate_condition=False).c
        c_track = front_tracking_speed(problem).c
        rel = abs(c_bvp - c_track) / (abs(c_bvp) + 0.01)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and elapsed < 120.0
    report(5, ok, f"max |c_bvp - c_tracking| / (|c| + 0.01) = "
                  f"{worst:.2e} (tol 1e-3) over 5 points, "
                  f"{elapsed:.0f} s (< 120 s)")


def test_criterion_06_parabolic_invariants(reference_model,
                                           reference_sweep):
    entry = next(e for e in reference_sweep.entries if e.eps == 1e-4)
    m = entry.steady.monitors
    space_tol = 1e-9 * reference_model.f_a(0.0)
    ok = (m.bound_excess <= 1e-9 and m.time_slip <= 1e-9
          and m.space_slip <= space_tol and m.space_checked > 0
          and m.time_checked > 0 and entry.residual <= 1e-8
          and entry.wall_time < 60.0)
    report(6, ok, f"eps=1e-4 corner run: bound excess "
                  f"{m.bound_excess:.1e}, time slip {m.time_slip:.1e}, "
                  f"space slip {m.space_slip:.1e} (tols 1e-9 scale), "
                  f"residual {entry.residual:.1e} (tol 1e-8), "
                  f"{entry.wall_time:.0f} s (< 60 s)")


def test_criterion_07_subsolution_bound(reference_sweep):
    beta = 2.0 / (math.sqrt(5.5) + 1.0)
    values = [(e.eps, float(e.steady.state.a[0]))
              for e in reference_sweep.entries]
    worst = min(v for _, v in values)
    ok = len(values) == 3 and all(v >= 0.9 * beta for _, v in values)
    report(7, ok, f"steady A(0) >= 0.9 beta = {0.9 * beta:.4f} at all "
                  f"three eps (min {worst:.4f})")


def test_criterion_08_limit_structure(reference_model, reference_sweep):
    entry = next(e for e in reference_sweep.entries if e.eps == 1e-5)
    cls = classify_limit(entry.steady, reference_model)
    rel_a = cls.diagnostics["max_rel_err_a"]
    rel_b = cls.diagnostics["max_rel_err_b"]
    slope = width_scaling_exponent(reference_sweep)
    ok = (cls.verdict == A_SHARP_INTERFACE and rel_a <= 0.05
          and rel_b <= 0.05 and abs(slope - 0.5) <= 0.15)
    report(8, ok, f"verdict {cls.verdict}, profile errors "
                  f"{rel_a:.3f}/{rel_b:.3f} past the 5 sqrt(eps) collar "
                  f"(tol 0.05), width slope {slope:.3f} (0.5 +/- 0.15)")


def test_criterion_09_figure2_reproduction(demo_report):
    rep = demo_report
    pw0, pw1 = rep.patchworks[0], rep.patchworks[1]
    inside = (pw0.x > pw0.window[0]) & (pw0.x < pw0.window[1])
    differing = sum(1 for i in np.nonzero(inside)[0]
                    if pw0.labels[i] != pw1.labels[i])
    h = rep.steadies[0].state.grid.h
    tol_front = 5 * math.sqrt(rep.eps) + 2 * h
    front_err = max(abs(f - rep.x_star_wave) for f in rep.fronts)
    ok = (differing > 0 and rep.steady_disagreement <= 1e-3
          and len(rep.fronts) == 2 and front_err <= tol_front
          and rep.elapsed < 180.0)
    report(9, ok, f"{differing} cells flip between seeds at eps=0, "
                  f"steady disagreement {rep.steady_disagreement:.1e} "
                  f"(tol 1e-3), fronts within {front_err:.2e} of wave "
                  f"prediction (tol {tol_front:.2e}), {rep.elapsed:.0f} s "
                  f"(< 180 s)")


def test_criterion_10_grid_convergence(asymmetric_model):
    t0 = time.perf_counter()
    xs = []
    for n in (635, 1269, 2537):
        steady = run_to_steady(asymmetric_model, 1e-3, grid=Grid1D(n),
                               tol=1e-10)
        xs.append(steady.front.x_star_eps)
    elapsed = time.perf_counter() - t0
    ratio = (xs[0] - xs[1]) / (xs[1] - xs[2])
    ok = 3.5 <= ratio <= 4.5 and elapsed < 120.0
    report(10, ok, f"Richardson ratio {ratio:.3f} over n=635/1269/2537 "
                   f"(window [3.5, 4.5]), {elapsed:.0f} s (< 120 s)")
