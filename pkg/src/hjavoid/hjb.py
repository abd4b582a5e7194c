"""Obstacle-constrained HJB time stepper (ENO2 + local Lax-Friedrichs + forward Euler).

The discrete update is

    v^{n+1} = max(v^n - dt * H_num(v^n), g(., s_{n+1}))

with ``v^0 = max(phi, g(., s_0))``.  In capture-basin mode the Hamiltonian
part of the lambda-scaled axes is clamped at zero (the Lax-Friedrichs
dissipation is left as is), and nodes already inside the reachable set are
not allowed to increase, so the masks ``v <= 0`` are nested in time.

Time-dependent constraints are handled on the physical slice: the sweep
runs backward in physical time from ``T``, so after ``k`` steps the field is
the value for trajectories starting at ``s = T - k dt`` with the remaining
horizon ``k dt``.  The final snapshot is the reachable set from ``s = 0``.
The clock-augmented 5-d formulation is available with ``augmented=True``.

Freezing the vehicle (the lambda control) is not a valid reduction once the
constraints move, because the obstacles keep moving while the vehicle waits.
Capture mode then switches to the reach-avoid update

    v^{n+1} = max(min(v^n - dt * H_num(v^n), phi), g(., s_{n+1}))

with the unclamped flux: stopping is only allowed inside the target.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from . import _kernels
from .dynamics import AugmentedPointMass, BoxDynamics, ControlBounds, PointMass
from .grid import Axis, GridSpec, ScalarField, cfl_timestep, eno2_derivatives
from .levelset import LevelSet, evaluate_on_grid

MODES = ("capture", "exact")


class CFLError(RuntimeError):
    """Raised when a requested step exceeds the stable time step."""


@dataclass(frozen=True)
class HJBProblem:
    grid: GridSpec
    target: LevelSet
    constraint: LevelSet | None
    horizon: float
    bounds: ControlBounds = ControlBounds()
    mode: str = "capture"
    cfl: float = 0.5
    order: int = 2
    augmented: bool = False
    dynamics: BoxDynamics | None = None

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if not 0 < self.cfl <= 1:
            raise CFLError(f"CFL number {self.cfl} outside (0, 1]; the explicit scheme would be unstable")
        if self.dynamics is None:
            dyn = AugmentedPointMass(self.bounds) if self.augmented else PointMass(self.bounds)
            object.__setattr__(self, "dynamics", dyn)
        if self.dynamics.ndim != self.grid.ndim:
            raise ValueError(f"dynamics has {self.dynamics.ndim} states, grid has {self.grid.ndim} axes")

    @property
    def time_dependent(self) -> bool:
        return self.constraint is not None and self.constraint.time_dependent

    @property
    def reach_avoid(self) -> bool:
        """Capture mode with moving constraints: unclamped flux, then ``min`` with the target."""
        return self.mode == "capture" and self.time_dependent

    @property
    def clamped(self) -> bool:
        return self.mode == "capture" and not self.time_dependent

    @property
    def clock_axes(self) -> tuple[int, ...]:
        return tuple(getattr(self.dynamics, "clock_axes", ()))

    def stable_dt(self) -> float:
        return cfl_timestep(self.grid, self.dynamics.sup_norms(self.grid), self.cfl)

    def schedule(self) -> tuple[int, float]:
        """Number of uniform steps and their size (largest stable dt that lands on T)."""
        dt = self.stable_dt()
        if math.isinf(dt):
            return 1, self.horizon
        n = max(1, math.ceil(self.horizon / dt - 1e-9))
        return n, self.horizon / n

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "horizon": self.horizon, "mode": self.mode,
                "cfl": self.cfl, "order": self.order, "augmented": self.augmented,
                "bounds": {"a_min": self.bounds.a_min, "a_max": self.bounds.a_max,
                           "w_max": self.bounds.w_max}}


def augment_grid(grid: GridSpec, horizon: float, n_clock: int) -> GridSpec:
    """Append a clock axis ``t in [0, horizon]`` to a state grid."""
    return GridSpec(grid.axes + (Axis("t", 0.0, float(horizon), int(n_clock)),))


# -- constraint evaluation -------------------------------------------------------


def _constraint_values(problem: HJBProblem, s: float) -> np.ndarray:
    if problem.constraint is None:
        return np.full(problem.grid.size, -np.inf)
    if problem.augmented:
        return _augmented_constraint(problem)
    return evaluate_on_grid(problem.constraint, problem.grid, s).ravel()


def _augmented_constraint(problem: HJBProblem) -> np.ndarray:
    # g(z, t) with t read from the clock axis, one physical slice at a time
    grid = problem.grid
    state = GridSpec(grid.axes[:-1])
    out = np.empty(grid.shape)
    for k, t in enumerate(grid.axes[-1].coords()):
        out[..., k] = evaluate_on_grid(problem.constraint, state, float(t))
    return out.ravel()


def physical_time(problem: HJBProblem, tau: float) -> float:
    """Physical time of the constraint slice used after evolving for ``tau``."""
    if problem.augmented or not problem.time_dependent:
        return 0.0
    return problem.horizon - tau


def target_values(problem: HJBProblem) -> np.ndarray:
    return evaluate_on_grid(problem.target, problem.grid).ravel()


def initialize(problem: HJBProblem) -> ScalarField:
    """``v^0 = max(phi, g)`` at every node."""
    phi = target_values(problem)
    g = _constraint_values(problem, physical_time(problem, 0.0))
    return ScalarField(problem.grid, np.maximum(phi, g), 0.0)


# -- fluxes ------------------------------------------------------------------


@dataclass
class _Sweep:
    """Kernel-ready layout of a problem's grid and velocity bounds."""

    shape5: np.ndarray
    strides5: np.ndarray
    cstrides5: np.ndarray
    inv_dx: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    clamped: np.ndarray

    @classmethod
    def build(cls, grid: GridSpec, dynamics: BoxDynamics, clock_axes=()) -> "_Sweep":
        nd = grid.ndim
        pad = 5 - nd
        shape = grid.shape
        coords = grid.coords()
        vb = dynamics.velocity_bounds(coords)
        arrays = [np.asarray(b, dtype=float) for pair in vb for b in pair]
        # first axis any bound depends on; bounds are stored over the trailing block
        lead = nd
        for a in arrays:
            a = a.reshape((1,) * (nd - a.ndim) + a.shape)
            dep = [j for j in range(nd) if a.shape[j] > 1]
            if dep:
                lead = min(lead, dep[0])
        block = shape[lead:]
        size = int(np.prod(block)) if block else 1
        lo = np.zeros((5, size))
        hi = np.zeros((5, size))
        for j, (l, h) in enumerate(vb):
            lo[pad + j] = _compact(l, nd, lead, block)
            hi[pad + j] = _compact(h, nd, lead, block)
        shape5 = np.array((1,) * pad + shape, dtype=np.int64)
        strides5 = np.array([int(np.prod(shape5[j + 1:])) for j in range(5)], dtype=np.int64)
        cstrides5 = np.zeros(5, dtype=np.int64)
        for j in range(lead, nd):
            cstrides5[pad + j] = int(np.prod(shape[j + 1:]))
        inv_dx = np.ones(5)
        inv_dx[pad:] = 1.0 / grid.steps
        clamped = np.ones(5, dtype=np.bool_)
        for j in clock_axes:
            clamped[pad + j] = False
        return cls(shape5, strides5, cstrides5, inv_dx, lo, hi, clamped)

    def run(self, v, capture, order, dt, g, out, store_flux):
        _kernels.sweep(v, self.shape5, self.strides5, self.cstrides5, self.inv_dx, self.lo,
                       self.hi, self.clamped, capture, order, dt, g, out, store_flux)


def _compact(b, nd, lead, block):
    b = np.asarray(b, dtype=float)
    b = b.reshape((1,) * (nd - b.ndim) + b.shape)
    b = b.reshape(b.shape[lead:]) if lead < nd else b.reshape(())
    return np.broadcast_to(b, block).ravel()


def numerical_hamiltonian(z, p_left, p_right, problem_or_dynamics, mode: str = "capture"):
    """Local Lax-Friedrichs flux at points ``z`` from one-sided gradients.

    ``p_left``/``p_right`` hold one entry (scalar or array) per axis.  In capture
    mode the Hamiltonian part of the lambda-scaled axes is clamped at zero.
    """
    dyn = problem_or_dynamics.dynamics if isinstance(problem_or_dynamics, HJBProblem) else problem_or_dynamics
    clock = set(getattr(dyn, "clock_axes", ()))
    vb = dyn.velocity_bounds(z)
    scaled = 0.0
    free = 0.0
    for j, (lo, hi) in enumerate(vb):
        pm, pp = np.asarray(p_left[j], float), np.asarray(p_right[j], float)
        pbar = 0.5 * (pm + pp)
        ham = np.maximum(-lo * pbar, -hi * pbar)
        free = free - 0.5 * np.maximum(np.abs(lo), np.abs(hi)) * (pp - pm)
        if j in clock:
            free = free + ham
        else:
            scaled = scaled + ham
    if mode == "capture":
        scaled = np.maximum(scaled, 0.0)
    return scaled + free


def flux_field(problem: HJBProblem, values: np.ndarray) -> np.ndarray:
    """Numerical Hamiltonian at every node, via the compiled sweep."""
    sw = _sweep_for(problem)
    out = np.empty(problem.grid.size)
    v = np.ascontiguousarray(values, dtype=float).ravel()
    sw.run(v, problem.clamped, problem.order, 0.0, v, out, True)
    return out


def flux_field_reference(problem: HJBProblem, values: np.ndarray) -> np.ndarray:
    """Pure numpy version of :func:`flux_field` (slow; used to check the kernel)."""
    grid = problem.grid
    arr = np.asarray(values, dtype=float).reshape(grid.shape)
    left, right = [], []
    for j, dx in enumerate(grid.steps):
        lj, rj = eno2_derivatives(arr, j, dx, problem.order)
        left.append(lj)
        right.append(rj)
    return np.broadcast_to(numerical_hamiltonian(grid.coords(), left, right, problem,
                                                 "capture" if problem.clamped else "exact"),
                           grid.shape).ravel()


_SWEEP_CACHE: dict = {}


def _sweep_for(problem: HJBProblem) -> _Sweep:
    key = (problem.grid, problem.dynamics, problem.clock_axes)
    sw = _SWEEP_CACHE.get(key)
    if sw is None:
        if len(_SWEEP_CACHE) > 8:
            _SWEEP_CACHE.clear()
        sw = _SWEEP_CACHE[key] = _Sweep.build(problem.grid, problem.dynamics, problem.clock_axes)
    return sw


# -- time stepping -------------------------------------------------------------


def step(v: ScalarField, tau: float, dt: float, problem: HJBProblem,
         g_next: np.ndarray | None = None, phi: np.ndarray | None = None) -> ScalarField:
    """One forward-Euler update from ``tau`` to ``tau + dt`` with the obstacle clamp.

    ``phi`` (target values) is only read in reach-avoid mode and computed if omitted.
    """
    limit = problem.stable_dt()
    if not dt > 0:
        raise ValueError("time step must be positive")
    if dt > limit * (1 + 1e-12):
        raise CFLError(f"time step {dt:.6g} exceeds the stable step {limit:.6g}")
    if g_next is None:
        g_next = _constraint_values(problem, physical_time(problem, tau + dt))
    out = np.empty(problem.grid.size)
    g_next = np.ascontiguousarray(g_next, dtype=float)
    _sweep_for(problem).run(v.values, problem.clamped, problem.order, dt, g_next, out, False)
    if problem.reach_avoid:
        if phi is None:
            phi = target_values(problem)
        # max(min(w, phi), g) == min(max(w, g), max(phi, g))
        np.minimum(out, np.maximum(phi, g_next), out=out)
    return ScalarField(problem.grid, out, tau + dt)


@dataclass
class ValueEvolution:
    snapshots: list[ScalarField]
    dt: float
    n_steps: int
    first_time: np.ndarray | None = None  # first step time with v <= 0, +inf if never
    step_seconds: list[float] = field(default_factory=list)

    @property
    def times(self) -> list[float]:
        return [s.time_stamp for s in self.snapshots]

    @property
    def final(self) -> ScalarField:
        return self.snapshots[-1]

    def at(self, t: float) -> ScalarField:
        """Snapshot whose time is nearest to ``t``."""
        return min(self.snapshots, key=lambda s: abs(s.time_stamp - t))

    def manifest(self, problem: HJBProblem) -> dict:
        return {"problem": problem.to_dict(), "dt": self.dt, "n_steps": self.n_steps,
                "snapshot_times": self.times, "solve_seconds": float(sum(self.step_seconds)),
                "step_seconds": self.step_seconds}

    def write_manifest(self, problem: HJBProblem, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.manifest(problem), fh, indent=1)


def snapshot_steps(times: Sequence[float], n_steps: int, dt: float) -> set[int]:
    """Step indices nearest to the requested output times (always 0 and the last)."""
    out = {0, n_steps}
    for t in times:
        out.add(int(min(n_steps, max(0, round(t / dt)))))
    return out


def solve(problem: HJBProblem, snapshot_times: Sequence[float] = (), track_min_time: bool = True,
          workers: int | None = None, progress=None) -> ValueEvolution:
    """Evolve the value function from 0 to the horizon.

    Constraints that move are re-evaluated every step at the physical time of
    the slice (see the module docstring).
    """
    if workers is not None:
        numba.set_num_threads(max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS)))
    n_steps, dt = problem.schedule()
    keep = snapshot_steps(snapshot_times, n_steps, dt)
    v = initialize(problem)
    snaps = [v.copy()] if 0 in keep else []
    first = None
    if track_min_time:
        first = np.where(v.values <= 0.0, 0.0, np.inf)
    moving = problem.time_dependent and not problem.augmented
    g = None if moving else _constraint_values(problem, 0.0)
    phi = target_values(problem) if problem.reach_avoid else None
    seconds = []
    for n in range(n_steps):
        t0 = time.perf_counter()
        g_next = _constraint_values(problem, physical_time(problem, (n + 1) * dt)) if moving else g
        v = step(v, n * dt, dt, problem, g_next, phi)
        # exact step time, free of accumulated rounding
        v.time_stamp = (n + 1) * dt if n + 1 < n_steps else problem.horizon
        if first is not None:
            newly = (v.values <= 0.0) & np.isinf(first)
            first[newly] = v.time_stamp
        seconds.append(time.perf_counter() - t0)
        if n + 1 in keep:
            snaps.append(v.copy())
        if progress is not None:
            progress(n + 1, n_steps)
    return ValueEvolution(snaps, dt, n_steps, first, seconds)


def solve_time_dependent(problem: HJBProblem, **kwargs) -> ValueEvolution:
    """Alias of :func:`solve`; moving constraints are detected from the expression."""
    return solve(problem, **kwargs)


# -- reachable sets ------------------------------------------------------------


def reachable_set(snapshot: ScalarField) -> np.ndarray:
    """Boolean node mask ``v <= 0`` in grid shape."""
    return snapshot.array() <= 0.0


def xy_slice(snapshot: ScalarField, index: Sequence[int]) -> np.ndarray:
    """(x, y) plane of a field at fixed indices of the remaining axes."""
    arr = snapshot.array()
    return arr[(slice(None), slice(None), *tuple(int(i) for i in index))]


def xy_slice_at(snapshot: ScalarField, values: Sequence[float]) -> np.ndarray:
    """(x, y) plane at arbitrary coordinates of the remaining axes (multilinear)."""
    grid = snapshot.grid
    arr = snapshot.array()
    for off, val in enumerate(values):
        ax = grid.axes[2 + off]
        t = (min(max(val, ax.lo), ax.hi) - ax.lo) / ax.step
        k = min(int(math.floor(t)), ax.n - 2)
        w = t - k
        arr = np.take(arr, k, axis=2) * (1 - w) + np.take(arr, k + 1, axis=2) * w
    return arr
