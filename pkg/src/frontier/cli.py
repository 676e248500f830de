"""Command-line interface.

Commands: check | steady | wavespeed | locate | sweep | figure2 |
zero-diffusion.  Every command reads an INI config (--config), writes its
artifacts atomically under the output directory, and reports through exit
codes: 0 success, 1 config error, 2 hypothesis or domain failure,
3 non-convergence, 4 grid too coarse.  FRONTIER_LOG sets log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from frontier.config import RunConfig, load_config
from frontier.errors import (
    ConfigError,
    DomainError,
    DomainTooSmallError,
    HypothesisError,
    NonConvergenceError,
    ResolutionError,
)
from frontier.experiment import (
    disambiguation_demo,
    epsilon_sweep,
    zero_diffusion_demo,
)
from frontier.model import find_bistable_interval, verify_hypotheses
from frontier.pde import Grid1D, run_to_steady, wkb_transform
from frontier.wave import (
    WaveProblem,
    front_tracking_speed,
    locate_boundary,
    solve_wave_bvp,
)

log = logging.getLogger("frontier.cli")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_HYPOTHESIS = 2
EXIT_NO_CONVERGENCE = 3
EXIT_GRID = 4


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return f"{value:.17g}"
    return str(value)


def _atomic_write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, header: Sequence[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_keys(path: str, pairs) -> None:
    _atomic_write(path, "".join(f"{k}={_fmt(v)}\n" for k, v in pairs))


# -- commands --------------------------------------------------------------


def cmd_check(cfg: RunConfig, args) -> int:
    report = verify_hypotheses(cfg.model)
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        line = f"{status} {check.code}: {check.description}"
        if not check.passed and check.detail:
            line += f" ({check.detail})"
        print(line)
    if report.all_passed:
        print("all hypotheses hold")
        return EXIT_OK
    failed = ", ".join(c.code for c in report.failed())
    print(f"failed: {failed}", file=sys.stderr)
    return EXIT_HYPOTHESIS


def cmd_steady(cfg: RunConfig, args) -> int:
    grid = None if cfg.grid is None else Grid1D(cfg.grid)
    steady = run_to_steady(cfg.model, cfg.eps, grid=grid, init=cfg.init,
                           tol=cfg.tol, dt_policy=cfg.dt_policy,
                           strict=not args.force)
    state = steady.state
    wkb = wkb_transform(state, cfg.model, cfg.eps) if cfg.eps > 0 else None
    x = state.grid.nodes
    rows = []
    for i in range(state.grid.n):
        rows.append((x[i], state.a[i], state.b[i],
                     wkb.phi_a[i] if wkb else 0.0,
                     wkb.phi_b[i] if wkb else 0.0,
                     steady.residual_a[i], steady.residual_b[i]))
    _write_csv(os.path.join(cfg.out_dir, "steady.csv"),
               ("x", "A", "B", "phi_A", "phi_B", "residual_A",
                "residual_B"), rows)

    front = steady.front
    pairs = [("eps", cfg.eps),
             ("x_star_eps", front.x_star_eps if front else float("nan")),
             ("width", front.width if front else float("nan")),
             ("residual", steady.residual),
             ("iterations", steady.iterations),
             ("dt_final", steady.dt_final)]
    _write_keys(os.path.join(cfg.out_dir, "summary.txt"), pairs)
    if front is not None:
        print(f"x_star_eps={front.x_star_eps:.17g}")
    else:
        print("no front crossing in the steady state")
    return EXIT_OK


def _wave_xs(cfg: RunConfig) -> List[float]:
    if cfg.xs is not None:
        return list(cfg.xs)
    window = find_bistable_interval(cfg.model)
    return list(np.linspace(window.lower, window.upper, 11)[1:-1])


def cmd_wavespeed(cfg: RunConfig, args) -> int:
    xs = [args.x] if args.x is not None else _wave_xs(cfg)
    header = ["x", "c", "converged"]
    if args.oracle:
        header.append("c_tracking")
    rows = []
    guess = None
    for x in xs:
        problem = WaveProblem(cfg.model, float(x), L=cfg.wave_L,
                              m=cfg.wave_m)
        result = solve_wave_bvp(problem, guess)
        guess = result
        row = [result.x_frozen, result.c, result.converged]
        if args.oracle:
            row.append(front_tracking_speed(problem).c)
        rows.append(row)
    _write_csv(os.path.join(cfg.out_dir, "wavespeed.csv"), header, rows)
    for row in rows:
        print(f"x={row[0]:.17g} c={row[1]:.17g}")
    return EXIT_OK


def cmd_locate(cfg: RunConfig, args) -> int:
    loc = locate_boundary(cfg.model, tol_x=cfg.tol_x)
    pairs = [("x_star", loc.x_star),
             ("bracket_lo", loc.bracket[0]),
             ("bracket_hi", loc.bracket[1]),
             ("iterations", loc.iterations),
             ("at_endpoint", loc.at_endpoint or "none")]
    _write_keys(os.path.join(cfg.out_dir, "locate.txt"), pairs)
    print(f"x_star={loc.x_star:.17g}")
    if loc.at_endpoint:
        print(f"speed map does not change sign; boundary sits at the "
              f"{loc.at_endpoint} window edge", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    if cfg.eps_list is None:
        print("config error: sweep needs eps_list in [solver]",
              file=sys.stderr)
        return EXIT_CONFIG
    rep = epsilon_sweep(cfg.model, cfg.eps_list, tol=cfg.tol,
                        dt_policy=cfg.dt_policy, init=cfg.init,
                        locate_tol_x=cfg.tol_x, threads=args.threads)
    rows = [(e.eps, e.x_star_eps, e.width, e.max_slope_a, e.residual,
             e.gap if e.gap is not None else float("nan"))
            for e in rep.entries]
    _write_csv(os.path.join(cfg.out_dir, "sweep.csv"),
               ("eps", "x_star_eps", "width", "max_slope_a", "residual",
                "gap"), rows)

    pairs = []
    for e in rep.entries:
        pairs += [("eps", e.eps), ("x_star_eps", e.x_star_eps),
                  ("width", e.width),
                  ("gap", e.gap if e.gap is not None else float("nan"))]
    pairs.append(("x_star_wave",
                  rep.x_star_wave if rep.x_star_wave is not None
                  else float("nan")))
    for eps, msg in rep.failures:
        pairs.append((f"failure_{eps:g}", msg))
    _write_keys(os.path.join(cfg.out_dir, "sweep_summary.txt"), pairs)

    for eps, msg in rep.failures:
        print(f"eps={eps:g} failed: {msg}", file=sys.stderr)
    if not rep.entries:
        print("every sweep entry failed", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    print(f"{len(rep.entries)} entries, x_star_wave="
          f"{_fmt(rep.x_star_wave if rep.x_star_wave is not None else float('nan'))}")
    return EXIT_OK


def cmd_figure2(cfg: RunConfig, args) -> int:
    out_dir = cfg.out_dir if "svg" in cfg.formats else None
    rep = disambiguation_demo(model=cfg.model, eps=cfg.eps,
                              seeds=(cfg.seed, cfg.seed + 1),
                              tol=cfg.tol, dt_policy=cfg.dt_policy,
                              out_dir=out_dir)
    if "csv" in cfg.formats:
        for pw in rep.patchworks:
            _write_csv(
                os.path.join(cfg.out_dir, f"patchwork_seed{pw.seed}.csv"),
                ("x", "a0", "b0", "a_end", "b_end", "label"),
                zip(pw.x, pw.a0, pw.b0, pw.a_end, pw.b_end, pw.labels))
        for seed, steady in zip(rep.seeds, rep.steadies):
            st = steady.state
            _write_csv(
                os.path.join(cfg.out_dir, f"steady_seed{seed}.csv"),
                ("x", "A", "B"), zip(st.grid.nodes, st.a, st.b))
    pairs = [("eps", rep.eps),
             ("x_star_wave", rep.x_star_wave),
             ("steady_disagreement", rep.steady_disagreement)]
    for seed, front in zip(rep.seeds, rep.fronts):
        pairs.append((f"front_seed{seed}", front))
    _write_keys(os.path.join(cfg.out_dir, "figure2_summary.txt"), pairs)
    print(f"fronts at {[f'{f:.6f}' for f in rep.fronts]}, wave predicts "
          f"{rep.x_star_wave:.6f}, steady disagreement "
          f"{rep.steady_disagreement:.2e}")
    return EXIT_OK


def cmd_zero_diffusion(cfg: RunConfig, args) -> int:
    n_cells = cfg.grid if cfg.grid is not None else 200
    rep = zero_diffusion_demo(cfg.model, seed=cfg.seed, n_cells=n_cells)
    _write_csv(os.path.join(cfg.out_dir, "zero_diffusion.csv"),
               ("x", "a0", "b0", "a_end", "b_end", "label"),
               zip(rep.x, rep.a0, rep.b0, rep.a_end, rep.b_end,
                   rep.labels))
    counts = " ".join(f"{k}={v}" for k, v in sorted(rep.counts.items()))
    print(f"window=({rep.window[0]:.6g}, {rep.window[1]:.6g}) {counts}")
    return EXIT_OK


_COMMANDS = {
    "check": cmd_check,
    "steady": cmd_steady,
    "wavespeed": cmd_wavespeed,
    "locate": cmd_locate,
    "sweep": cmd_sweep,
    "figure2": cmd_figure2,
    "zero-diffusion": cmd_zero_diffusion,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="path to the INI run configuration")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("--seed", type=int, help="override the run seed")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweep entries")
    common.add_argument("--force", action="store_true",
                        help="run even if the hypothesis check fails")

    parser = argparse.ArgumentParser(
        prog="frontier",
        description="competition front laboratory on the unit interval")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common],
                   help="verify the structural hypotheses")
    sub.add_parser("steady", parents=[common],
                   help="run the parabolic system to steady state")
    wavespeed = sub.add_parser("wavespeed", parents=[common],
                               help="traveling-wave speed at frozen x")
    group = wavespeed.add_mutually_exclusive_group(required=True)
    group.add_argument("--x", type=float, help="single frozen position")
    group.add_argument("--map", action="store_true",
                       help="sample the whole speed map")
    wavespeed.add_argument("--oracle", action="store_true",
                           help="add the front-tracking speed column")
    sub.add_parser("locate", parents=[common],
                   help="boundary as the zero of the speed map")
    sub.add_parser("sweep", parents=[common],
                   help="steady states over an eps list plus the wave gap")
    sub.add_parser("figure2", parents=[common],
                   help="zero-diffusion ambiguity vs diffusive front demo")
    sub.add_parser("zero-diffusion", parents=[common],
                   help="per-cell limits of the diffusion-free dynamics")
    return parser


def _setup_logging() -> None:
    level_name = os.environ.get("FRONTIER_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; fold into the config code
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out is not None:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed

    try:
        return _COMMANDS[args.command](cfg, args)
    except HypothesisError as exc:
        detail = f" [{exc.code}]" if exc.code else ""
        print(f"hypothesis failure{detail}: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except ResolutionError as exc:
        required = exc.required_nodes
        print(f"grid too coarse: {exc}"
              + (f" (required n >= {required})" if required else ""),
              file=sys.stderr)
        return EXIT_GRID
    except (NonConvergenceError, DomainTooSmallError) as exc:
        residual = getattr(exc, "residual", None)
        tail = f" (residual {residual:.3e})" if residual is not None else ""
        print(f"no convergence: {exc}{tail}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
