"""Minimal-time field and optimal trajectory reconstruction.

``T(z)`` is the first step time at which the value function becomes
non-positive (``+inf`` if it never does).  Trajectories follow the greedy
rule ``u_k* = argmin_k T(heun(z_n, u_k, h))`` over a finite control grid,
ties going to the lowest control index.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .collision import (SafetyBound, certify_step, obstacle_shape, secure_margin_check,
                        shapes_intersect, vehicle_rect)
from .dynamics import ControlBounds
from .grid import GridSpec, ScalarField
from .hjb import ValueEvolution
from .levelset import LevelSet

SENTINEL = math.inf


@dataclass
class MinimalTimeField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float).ravel()
        if self.values.size != self.grid.size:
            raise ValueError("size mismatch between grid and values")

    @property
    def augmented(self) -> bool:
        return self.grid.ndim == 5

    def as_field(self) -> ScalarField:
        return ScalarField(self.grid, self.values, allow_inf=True)


def accumulate_min_time(evolution: ValueEvolution) -> MinimalTimeField:
    """First time with ``v <= 0`` per node.

    Uses the per-step record kept by the solver when present, otherwise
    scans the stored snapshots in increasing time.
    """
    grid = evolution.snapshots[0].grid
    if evolution.first_time is not None:
        return MinimalTimeField(grid, evolution.first_time.copy())
    out = np.full(grid.size, SENTINEL)
    for snap in sorted(evolution.snapshots, key=lambda s: s.time_stamp):
        newly = (snap.values <= 0.0) & np.isinf(out)
        out[newly] = snap.time_stamp
    return MinimalTimeField(grid, out)


def interp_min_time(mt: MinimalTimeField, points, penalty: float | None = None) -> np.ndarray:
    """Multilinear interpolation at each row of ``points``.

    A point outside the grid box, or a cell with a sentinel corner of
    non-zero weight, yields the sentinel.  With ``penalty`` set, sentinel
    corners instead count as that finite time, and only a cell whose
    weighted corners are all sentinel yields the sentinel.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    grid = mt.grid
    arr = mt.values.reshape(grid.shape)
    inside = np.ones(len(pts), dtype=bool)
    lo_idx, wts = [], []
    for j, a in enumerate(grid.axes):
        slack = 1e-9 * a.step
        inside &= (pts[:, j] >= a.lo - slack) & (pts[:, j] <= a.hi + slack)
        t = (np.clip(pts[:, j], a.lo, a.hi) - a.lo) / a.step
        k = np.clip(np.floor(t).astype(int), 0, a.n - 2)
        lo_idx.append(k)
        wts.append(np.clip(t - k, 0.0, 1.0))
    out = np.zeros(len(pts))
    blocked = ~inside
    finite_w = np.zeros(len(pts))
    for corner in range(1 << grid.ndim):
        w = np.ones(len(pts))
        ind = []
        for j in range(grid.ndim):
            bit = (corner >> j) & 1
            ind.append(lo_idx[j] + bit)
            w = w * (wts[j] if bit else 1.0 - wts[j])
        val = arr[tuple(ind)]
        live = w > 0
        fin = np.isfinite(val)
        if penalty is None:
            blocked |= live & ~fin
        else:
            finite_w += np.where(live & fin, w, 0.0)
        out += w * np.where(fin, val, 0.0 if penalty is None else penalty)
    if penalty is not None:
        blocked |= finite_w == 0
    out[blocked] = SENTINEL
    return out


def interp_T(mt: MinimalTimeField, z: Sequence[float]) -> float:
    return float(interp_min_time(mt, np.asarray(z, dtype=float)[None, :])[0])


# -- integration -----------------------------------------------------------------


def _rhs(z: np.ndarray, u: np.ndarray) -> np.ndarray:
    # z: (d, K) states, u: (2, K) controls; clock rows (d = 5) run at rate 1
    d = np.empty_like(z)
    d[0] = z[3] * np.cos(z[2])
    d[1] = z[3] * np.sin(z[2])
    d[2] = u[1]
    d[3] = u[0]
    if z.shape[0] == 5:
        d[4] = 1.0
    return d


def heun_step(z, u, h: float, substeps: int = 1) -> np.ndarray:
    """Heun (explicit trapezoid) step(s) with a constant control over ``h``.

    ``z`` may be a single state or an array of shape (d, K) with ``u`` of shape (2, K).
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    zz = z[:, None] if single else z.copy()
    uu = np.asarray(u, dtype=float)
    uu = uu[:, None] if uu.ndim == 1 else uu
    dt = h / substeps
    for _ in range(substeps):
        f0 = _rhs(zz, uu)
        f1 = _rhs(zz + dt * f0, uu)
        zz = zz + 0.5 * dt * (f0 + f1)
    return zz[:, 0] if single else zz


# -- reconstruction -----------------------------------------------------------


@dataclass
class TrajectoryStep:
    n: int
    t: float
    state: np.ndarray
    control: tuple[float, float] | None
    t_min: float
    g: float
    certified: str = ""


@dataclass
class Trajectory:
    steps: list[TrajectoryStep] = field(default_factory=list)
    reason: str = ""
    h: float = 0.0

    @property
    def states(self) -> np.ndarray:
        return np.array([s.state[:4] for s in self.steps])

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.steps])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "t", "x", "y", "psi", "v", "a", "w", "Tmin", "g", "certified"])
            for s in self.steps:
                a, om = s.control if s.control is not None else ("", "")
                w.writerow([s.n, repr(s.t), *(repr(float(c)) for c in s.state[:4]),
                            a if a == "" else repr(float(a)), om if om == "" else repr(float(om)),
                            "inf" if math.isinf(s.t_min) else repr(float(s.t_min)),
                            "" if math.isnan(s.g) else repr(float(s.g)), s.certified])


def default_eta(grid: GridSpec, v_char: float) -> float:
    """1.5 position-mesh steps travelled at the characteristic speed."""
    return 1.5 * float(max(grid.steps[:2])) / abs(v_char)


def reconstruct(mt: MinimalTimeField, z0: Sequence[float], h: float, eta: float, max_steps: int,
                controls: np.ndarray | None = None, bounds: ControlBounds = ControlBounds(),
                substeps: int = 1, constraint: LevelSet | None = None,
                penalty: float | None = None) -> Trajectory:
    """Greedy descent of the minimal-time field from ``z0``.

    On a clock-augmented field (5 axes) the state carries the physical time
    as fifth component, starting at 0.  ``penalty`` is passed to
    :func:`interp_min_time`; left at ``None`` every cell touching an
    unreachable node is unreachable, which on coarse grids can strand the
    greedy descent next to the edge of the reachable set.  With a
    ``constraint``, candidates with ``g > 0`` are discarded, so every
    accepted state satisfies the constraints.
    """
    if controls is None:
        controls = bounds.grid()
    controls = np.asarray(controls, dtype=float)
    if controls.ndim != 2 or controls.shape[0] == 0:
        raise ValueError("control grid is empty")
    if not h > 0:
        raise ValueError("reconstruction step must be positive")
    z = np.asarray(z0, dtype=float)[:4]
    if mt.augmented:
        z = np.append(z, 0.0)
    U = controls.T

    def g_at(state, t):
        if constraint is None:
            return math.nan
        return float(np.asarray(constraint(state, t)))

    traj = Trajectory(h=h)
    T = float(interp_min_time(mt, z[None, :], penalty)[0])
    traj.steps.append(TrajectoryStep(0, 0.0, z.copy(), None, T, g_at(z, 0.0)))
    if math.isinf(T):
        traj.reason = "infeasible"
        return traj
    if T < eta:
        traj.reason = "target-reached"
        return traj
    n = 0
    while True:
        if n >= max_steps:
            traj.reason = "max-iterations"
            return traj
        cand = heun_step(np.repeat(z[:, None], U.shape[1], axis=1), U, h, substeps)
        values = interp_min_time(mt, cand.T, penalty)
        if constraint is not None:
            # interpolated times can be finite next to obstacles smaller than a cell
            values[np.broadcast_to(constraint(cand[:4], (n + 1) * h), values.shape) > 0] = np.inf
        k = int(np.argmin(values))  # first minimum: lowest control index wins ties
        traj.steps[-1].control = (float(controls[k, 0]), float(controls[k, 1]))
        z = cand[:, k].copy()
        n += 1
        T = float(values[k])
        traj.steps.append(TrajectoryStep(n, n * h, z.copy(), None, T, g_at(z, n * h)))
        if math.isinf(T):
            traj.reason = "infeasible"
            return traj
        if T < eta:
            traj.reason = "target-reached"
            return traj


def certify_trajectory(traj: Trajectory, vehicle_half, obstacles, bound: SafetyBound,
                       margin: float | None = None, constraint: LevelSet | None = None) -> None:
    """Fill the ``certified`` column: ``margin``, ``yes`` or ``violated``.

    ``margin``: the obstacle function stays at least ``margin`` negative at both
    ends and the step is short enough to cover the interval in between.
    ``yes``: disjointness is carried from the previous sample to this one.
    """
    if not obstacles:
        for s in traj.steps:
            s.certified = "yes"
        return
    from .levelset import rect_avoidance  # local: only rectangles carry a corner function

    rects = [o for o in obstacles if o.shape == "rect"]
    g_obs = rect_avoidance(vehicle_half, rects) if rects and constraint is None else constraint
    prev = None
    for s in traj.steps:
        veh = vehicle_rect(s.state, vehicle_half)
        obs = [obstacle_shape(o, s.t) for o in obstacles]
        if prev is None:
            s.certified = "violated" if any(shapes_intersect(veh, o) for o in obs) else "yes"
        else:
            pveh, pobs, pt, pstate = prev
            dt = s.t - pt
            cert = certify_step(pveh, pobs, veh, obs, dt, bound)
            ok_margin = False
            if margin is not None and g_obs is not None:
                g0 = float(np.asarray(g_obs(pstate, pt)))
                g1 = float(np.asarray(g_obs(s.state, s.t)))
                ok_margin = secure_margin_check(g0, g1, margin, bound.v_bar, dt)
            s.certified = "margin" if (ok_margin and cert.ok) else ("yes" if cert.ok else "violated")
        prev = (veh, obs, s.t, s.state)
