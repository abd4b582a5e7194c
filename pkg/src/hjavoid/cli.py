"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (CFL
refusal), 3 infeasible reconstruction.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .hjb import CFLError
from .scenarios import ConfigError, builtin_names, builtin_path, load_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 1, 2, 3


def _floats(text: str, count: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"expected {count} numbers, got {len(vals)}")
    return vals


def _levels(text: str) -> list[int]:
    """``1..3`` or ``1,2,3``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(t) for t in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hjavoid", description="HJB reachability for collision-free vehicle motion")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, snapshots=True):
        sp.add_argument("config", help="YAML scenario file or built-in scenario name")
        sp.add_argument("-o", "--output", default=None, help="output directory")
        sp.add_argument("-j", "--workers", type=int, default=None, help="worker threads for the sweeps")
        sp.add_argument("--cfl", type=float, default=None, help="CFL number (default from config)")
        if snapshots:
            sp.add_argument("--snapshots", type=_floats, default=None, help="snapshot times, e.g. 0.5,1,1.5")

    common(sub.add_parser("solve", help="solve the HJB equation and export snapshots"))
    rp = sub.add_parser("reconstruct", help="minimal-time trajectory with collision certificates")
    common(rp, snapshots=False)
    rp.add_argument("--start", type=lambda s: _floats(s, 4), default=None, help="x,y,psi,v")

    cp = sub.add_parser("convergence", help="grid-refinement error table")
    common(cp, snapshots=False)
    cp.add_argument("--levels", type=_levels, default=[1, 2, 3])
    cp.add_argument("--reference", type=int, default=4)

    xp = sub.add_parser("raster", help="sample a level-set expression on the (x, y) plane")
    xp.add_argument("config")
    xp.add_argument("--expr", required=True, choices=["road", "obstacle", "target", "constraint"])
    xp.add_argument("--time", type=float, default=0.0)
    xp.add_argument("--psi", type=float, default=None)
    xp.add_argument("--v", dest="speed", type=float, default=None)
    xp.add_argument("-o", "--output", default=None, help="CSV file (default: stdout summary only)")

    sp = sub.add_parser("scenario", help="list or show built-in scenarios")
    sp.add_argument("action", choices=["list", "show"])
    sp.add_argument("name", nargs="?")
    return p


def _out(args, default: str) -> str:
    return args.output or default


def _cmd_solve(args) -> int:
    from .runs import count_components, reachable_set, run_solve

    cfg = load_config(args.config)
    out = _out(args, f"out/{cfg.name}")
    res = run_solve(cfg, out, workers=args.workers, cfl=args.cfl, snapshot_times=args.snapshots)
    ev = res.evolution
    print(f"{cfg.name}: {ev.n_steps} steps of dt={ev.dt:.4e}, {sum(ev.step_seconds):.2f} s; output in {out}")
    for snap in ev.snapshots:
        sl = res.slice_at(snap, cfg.output.slice_psi, cfg.output.slice_v)
        print(f"  t={snap.time_stamp:.4f}: {int(reachable_set(snap).sum())} reachable nodes, "
              f"{count_components(sl <= 0)} component(s) in the (psi, v) = "
              f"({cfg.output.slice_psi}, {cfg.output.slice_v}) slice")
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    from .runs import run_reconstruct

    cfg = load_config(args.config)
    out = _out(args, f"out/{cfg.name}")
    res = run_reconstruct(cfg, out, start=args.start, workers=args.workers, cfl=args.cfl)
    tr = res.trajectory
    last = tr.steps[-1]
    print(f"{cfg.name}: {tr.reason} after {len(tr.steps) - 1} steps (t={last.t:.3f}, T_min={last.t_min:.4g}); "
          f"dt_max={res.bound.dt_max:.4g}; output in {out}")
    bad = [s.n for s in tr.steps if s.certified == "violated"]
    if bad:
        print(f"  certification violated at steps {bad[:10]}{' ...' if len(bad) > 10 else ''}")
    return EXIT_INFEASIBLE if tr.reason == "infeasible" else EXIT_OK


def _cmd_convergence(args) -> int:
    from .runs import format_table, run_convergence

    cfg = load_config(args.config)
    if args.cfl is not None:
        cfg.cfl = args.cfl
    if any(m >= args.reference for m in args.levels):
        raise ConfigError("every level must be coarser than the reference")
    out = _out(args, f"out/{cfg.name}-convergence")
    rows = run_convergence(cfg, args.levels, args.reference, out, workers=args.workers,
                           progress=lambda s: print(s, flush=True))
    print(format_table(rows))
    return EXIT_OK


def _cmd_raster(args) -> int:
    from .runs import rasterize_levelset

    cfg = load_config(args.config)
    _, _, vals = rasterize_levelset(cfg, args.expr, args.time, args.psi, args.speed, args.output)
    print(f"{args.expr} at t={args.time}: {vals.shape[0]}x{vals.shape[1]} nodes, "
          f"min {vals.min():.4g}, max {vals.max():.4g}, {int((vals <= 0).sum())} nodes with value <= 0")
    return EXIT_OK


def _cmd_scenario(args) -> int:
    if args.action == "list":
        for name in builtin_names():
            cfg = load_config(name)
            print(f"{name:12s} {cfg.description}")
        return EXIT_OK
    if not args.name:
        raise ConfigError("scenario show needs a name")
    if args.name not in builtin_names():
        raise ConfigError(f"unknown scenario {args.name!r}; available: {', '.join(builtin_names())}")
    print(builtin_path(args.name).read_text(), end="")
    return EXIT_OK


COMMANDS = {"solve": _cmd_solve, "reconstruct": _cmd_reconstruct, "convergence": _cmd_convergence,
            "raster": _cmd_raster, "scenario": _cmd_scenario}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CFLError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
