"""End-to-end runs on a scenario config: solve, reconstruct, convergence table, raster."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage

from .collision import SafetyBound, compute_safety_bound
from .grid import GridSpec, ScalarField, convergence_order, error_norms, save_npz
from .hjb import HJBProblem, ValueEvolution, augment_grid, reachable_set, solve, xy_slice_at
from .levelset import evaluate_on_grid
from .mintime import (MinimalTimeField, Trajectory, accumulate_min_time, certify_trajectory,
                      default_eta, reconstruct)
from .scenarios import ConfigError, ScenarioConfig, with_resolution

log = logging.getLogger(__name__)


def build_problem(cfg: ScenarioConfig, *, augmented: bool = False, cfl: float | None = None,
                  grid: GridSpec | None = None) -> HJBProblem:
    grid = grid or cfg.grid
    if augmented:
        grid = augment_grid(grid, cfg.horizon, cfg.reconstruction.n_clock)
    return HJBProblem(grid, cfg.target_expr(), cfg.constraint_expr(), cfg.horizon,
                      cfg.vehicle.bounds, cfg.mode, cfl if cfl is not None else cfg.cfl,
                      augmented=augmented)


@dataclass
class SolveResult:
    problem: HJBProblem
    evolution: ValueEvolution
    min_time: MinimalTimeField | None

    def slice_at(self, snapshot: ScalarField, psi: float, v: float) -> np.ndarray:
        return xy_slice_at(snapshot, [psi, v])


def run_solve(cfg: ScenarioConfig, outdir=None, *, workers: int | None = None, cfl: float | None = None,
              snapshot_times: Sequence[float] | None = None, augmented: bool = False,
              track_min_time: bool = True) -> SolveResult:
    """Solve a scenario and (optionally) export snapshots, masks, slices and the min-time field."""
    problem = build_problem(cfg, augmented=augmented, cfl=cfl)
    times = cfg.output.snapshot_times if snapshot_times is None else tuple(snapshot_times)
    ev = solve(problem, times, track_min_time=track_min_time, workers=workers)
    # on the physical slice, intermediate fields of a moving scene are not min-times from s = 0
    mt = accumulate_min_time(ev) if track_min_time and (augmented or not problem.time_dependent) else None
    result = SolveResult(problem, ev, mt)
    if outdir is not None:
        _export_solve(cfg, result, Path(outdir))
    return result


def _export_solve(cfg: ScenarioConfig, res: SolveResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    res.evolution.write_manifest(res.problem, out / "manifest.json")
    grid = res.problem.grid
    xs, ys = grid.axes[0].coords(), grid.axes[1].coords()
    for k, snap in enumerate(res.evolution.snapshots):
        tag = f"t{snap.time_stamp:.4f}"
        save_npz(snap, out / f"value_{tag}.npz")
        np.save(out / f"mask_{tag}.npy", reachable_set(snap))
        if grid.ndim == 4:
            sl = xy_slice_at(snap, [cfg.output.slice_psi, cfg.output.slice_v])
            _write_slice(out / f"slice_{tag}.csv", xs, ys, sl)
    if res.min_time is not None:
        save_npz(res.min_time.as_field(), out / "min_time.npz")


def _write_slice(path, xs, ys, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value", "reachable"])
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(values[i, j])), int(values[i, j] <= 0)])


def count_components(mask2d: np.ndarray) -> int:
    """Number of 4-connected components of a boolean (x, y) mask."""
    _, n = ndimage.label(np.asarray(mask2d, dtype=bool))
    return int(n)


# -- reconstruction ------------------------------------------------------------


@dataclass
class ReconstructResult:
    trajectory: Trajectory
    bound: SafetyBound
    solve: SolveResult
    warnings: list[str]


def run_reconstruct(cfg: ScenarioConfig, outdir=None, *, start: Sequence[float] | None = None,
                    solved: SolveResult | None = None, workers: int | None = None,
                    cfl: float | None = None) -> ReconstructResult:
    """Minimal-time field, greedy trajectory and per-step collision certificates.

    Scenes with moving obstacles use the clock-augmented model so that the
    minimal time depends on the physical start time.
    """
    rc = cfg.reconstruction
    z0 = tuple(float(s) for s in (start if start is not None else cfg.vehicle.initial_state))
    if len(z0) != 4:
        raise ConfigError("start state needs four components x,y,psi,v")
    if not cfg.grid.contains(z0):
        raise ConfigError(f"start state {z0} lies outside the grid box")
    if solved is None or solved.min_time is None:
        solved = run_solve(cfg, None, workers=workers, cfl=cfl, snapshot_times=(),
                           augmented=cfg.time_dependent)
    mt = solved.min_time
    eta = rc.eta if rc.eta is not None else default_eta(cfg.grid, z0[3])
    controls = cfg.vehicle.bounds.grid(rc.n_a, rc.n_w)
    penalty = rc.penalty if rc.penalty is not None else 2.0 * cfg.horizon
    traj = reconstruct(mt, z0, rc.h, eta, rc.max_steps, controls, substeps=rc.substeps,
                       constraint=cfg.constraint_expr(), penalty=penalty)
    bound = compute_safety_bound(cfg.vehicle.half_lengths, cfg.vehicle.bounds, cfg.obstacles, cfg.grid)
    warnings = []
    if rc.h >= bound.dt_max:
        warnings.append(f"reconstruction step {rc.h} is not below the certified step bound {bound.dt_max:.4g}")
    certify_trajectory(traj, cfg.vehicle.half_lengths, cfg.obstacles, bound, rc.margin,
                       cfg.obstacle_expr())
    for w in warnings:
        log.warning(w)
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        traj.write_csv(out / "trajectory.csv")
        with open(out / "trajectory.json", "w") as fh:
            json.dump({"reason": traj.reason, "steps": len(traj.steps), "h": rc.h, "eta": eta,
                       "d_under": bound.d_under, "v_bar": bound.v_bar, "dt_max": bound.dt_max,
                       "warnings": warnings}, fh, indent=1)
    return ReconstructResult(traj, bound, solved, warnings)


# -- convergence table -------------------------------------------------------------


@dataclass
class ConvergenceRow:
    nx: int
    ny: int
    dt: float
    errors: tuple[float, float, float]
    orders: tuple[float | None, float | None, float | None]
    seconds: float


def level_resolution(m: int) -> tuple[int, int]:
    return 35 * 2 ** m, 4 * 2 ** m


def run_convergence(cfg: ScenarioConfig, levels: Sequence[int], reference: int, outdir=None,
                    *, workers: int | None = None, progress=None) -> list[ConvergenceRow]:
    """Error table of the final value function against a finer reference run.

    Level ``m`` uses ``(N_x, N_y) = (35 * 2^m, 4 * 2^m)``; the other axes keep
    the config's node counts.  Wall-clock covers the time loop only.
    """
    def run(m):
        c = with_resolution(cfg, *level_resolution(m))
        p = build_problem(c)
        ev = solve(p, (), track_min_time=False, workers=workers)
        return ev, float(sum(ev.step_seconds))

    ref_ev, _ = run(reference)
    ref = ref_ev.final
    if progress:
        progress(f"reference m={reference} done")
    rows: list[ConvergenceRow] = []
    for m in levels:
        ev, secs = run(m)
        e = error_norms(ev.final, ref)
        if rows:
            prev = rows[-1].errors
            orders = tuple(convergence_order(a, b) if a > 0 and b > 0 else None for a, b in zip(prev, e))
        else:
            orders = (None, None, None)
        nx, ny = level_resolution(m)
        rows.append(ConvergenceRow(nx, ny, ev.dt, e, orders, secs))
        if progress:
            progress(format_row(rows[-1]))
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        write_convergence_csv(rows, out / "convergence.csv")
        (out / "convergence.md").write_text(format_table(rows))
    return rows


def _fmt_order(o):
    return "--" if o is None else f"{o:.2f}"


def format_row(r: ConvergenceRow) -> str:
    (ei, e1, e2), (oi, o1, o2) = r.errors, r.orders
    return (f"| {r.nx} | {r.ny} | {r.dt:.3e} | {ei:.4g} | {_fmt_order(oi)} | {e1:.4g} | "
            f"{_fmt_order(o1)} | {e2:.4g} | {_fmt_order(o2)} | {r.seconds:.2f} |")


def format_table(rows: Sequence[ConvergenceRow]) -> str:
    head = ("| N_x | N_y | dt | e_Linf | order | e_L1 | order | e_L2 | order | cpu_s |\n"
            "|---|---|---|---|---|---|---|---|---|---|\n")
    return head + "\n".join(format_row(r) for r in rows) + "\n"


def write_convergence_csv(rows: Sequence[ConvergenceRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N_x", "N_y", "dt", "e_Linf", "order_Linf", "e_L1", "order_L1", "e_L2", "order_L2",
                    "cpu_seconds"])
        for r in rows:
            w.writerow([r.nx, r.ny, repr(r.dt), *[x for pair in zip(r.errors, r.orders)
                                                  for x in (repr(pair[0]), "" if pair[1] is None else repr(pair[1]))],
                        f"{r.seconds:.3f}"])


# -- raster ------------------------------------------------------------------


EXPRESSIONS = ("road", "obstacle", "target", "constraint")


def rasterize_levelset(cfg: ScenarioConfig, which: str, t: float = 0.0, psi: float | None = None,
                       v: float | None = None, path=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate one of the scenario's expressions on the (x, y) plane of its grid."""
    if which not in EXPRESSIONS:
        raise ConfigError(f"unknown expression {which!r}; choose from {EXPRESSIONS}")
    expr = {"road": cfg.road_expr, "obstacle": cfg.obstacle_expr, "target": cfg.target_expr,
            "constraint": cfg.constraint_expr}[which]()
    if expr is None:
        raise ConfigError(f"scenario {cfg.name!r} has no {which} expression")
    psi = cfg.output.slice_psi if psi is None else psi
    v = cfg.output.slice_v if v is None else v
    ax = cfg.grid.axes
    plane = GridSpec((ax[0], ax[1], replace(ax[2], lo=psi - 1.0, hi=psi, n=2),
                      replace(ax[3], lo=v - 1.0, hi=v, n=2)))
    vals = evaluate_on_grid(expr, plane, t)[:, :, 1, 1]
    xs, ys = ax[0].coords(), ax[1].coords()
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "value"])
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    w.writerow([repr(float(x)), repr(float(y)), repr(float(vals[i, j]))])
    return xs, ys, vals
