"""Collision certification for rectangular vehicles and obstacles.

The corner condition ``g < 0`` (no corner of either rectangle inside the
other) does not by itself imply that two rectangles are disjoint: two thin
rectangles can cross like a plus sign.  It does imply disjointness at the
next sample when the pair was disjoint at the previous one and the sampling
step is below ``d_under / v_bar`` (smallest half-length over largest relative
corner speed).  :func:`certify_step` checks exactly those three hypotheses.

The exact overlap test uses separating axes and treats rectangles as closed
sets, so touching rectangles intersect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .dynamics import ControlBounds
from .grid import GridSpec
from .levelset import ObstacleSpec, box_inclusion, rect_corners


class Rect(NamedTuple):
    x: float
    y: float
    psi: float
    lx: float
    ly: float

    @property
    def center(self):
        return (self.x, self.y)

    @property
    def half(self):
        return (self.lx, self.ly)

    def corners(self) -> np.ndarray:
        return np.array(rect_corners(self.center, self.psi, self.half), dtype=float)

    def axes(self) -> np.ndarray:
        c, s = math.cos(self.psi), math.sin(self.psi)
        return np.array([[c, s], [-s, c]])


class Disk(NamedTuple):
    x: float
    y: float
    r: float


def obstacle_shape(ob: ObstacleSpec, s: float):
    """Rect or Disk occupied by an obstacle at time ``s``."""
    x, y, psi = ob.pose(s)
    if ob.shape == "rect":
        return Rect(x, y, psi, *ob.half_lengths)
    return Disk(x, y, ob.radius)


def vehicle_rect(z: Sequence[float], half_lengths) -> Rect:
    return Rect(float(z[0]), float(z[1]), float(z[2]), float(half_lengths[0]), float(half_lengths[1]))


# -- exact geometry ----------------------------------------------------------


def exact_rect_intersect(a: Rect, b: Rect, tol: float = 0.0) -> bool:
    """Separating-axis test over the four edge normals (closed rectangles)."""
    ca, cb = a.corners(), b.corners()
    for n in np.vstack([a.axes(), b.axes()]):
        pa, pb = ca @ n, cb @ n
        if pa.max() < pb.min() - tol or pb.max() < pa.min() - tol:
            return False
    return True


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    t = float(np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0))
    return float(np.hypot(*(a + t * ab - p)))


def _edges(c: np.ndarray):
    # corners come in the order (+,+), (-,+), (+,-), (-,-); walk the perimeter
    ring = c[[0, 1, 3, 2]]
    return [(ring[k], ring[(k + 1) % 4]) for k in range(4)]


def _point_in_rect(p, r: Rect) -> bool:
    c, s = math.cos(r.psi), math.sin(r.psi)
    dx, dy = p[0] - r.x, p[1] - r.y
    return abs(c * dx + s * dy) <= r.lx and abs(-s * dx + c * dy) <= r.ly


def rect_distance(a: Rect, b: Rect) -> float:
    """Euclidean distance between two rectangles, 0 when they intersect."""
    if exact_rect_intersect(a, b):
        return 0.0
    ca, cb = a.corners(), b.corners()
    best = math.inf
    for p in ca:
        for e0, e1 in _edges(cb):
            best = min(best, _point_segment_distance(p, e0, e1))
    for p in cb:
        for e0, e1 in _edges(ca):
            best = min(best, _point_segment_distance(p, e0, e1))
    return best


def _disk_rect_distance(d: Disk, r: Rect) -> float:
    c, s = math.cos(r.psi), math.sin(r.psi)
    dx, dy = d.x - r.x, d.y - r.y
    qx, qy = abs(c * dx + s * dy), abs(-s * dx + c * dy)
    return math.hypot(max(qx - r.lx, 0.0), max(qy - r.ly, 0.0)) - d.r


def shape_distance(a, b) -> float:
    """Distance between two shapes (Rect or Disk), 0 when they intersect."""
    if isinstance(a, Disk) and isinstance(b, Disk):
        return max(0.0, math.hypot(a.x - b.x, a.y - b.y) - a.r - b.r)
    if isinstance(a, Disk):
        return max(0.0, _disk_rect_distance(a, b))
    if isinstance(b, Disk):
        return max(0.0, _disk_rect_distance(b, a))
    return rect_distance(a, b)


def shapes_intersect(a, b) -> bool:
    if isinstance(a, Rect) and isinstance(b, Rect):
        return exact_rect_intersect(a, b)
    return shape_distance(a, b) <= 0.0


# -- corner condition -----------------------------------------------------------


def _inclusion(p, r: Rect) -> float:
    c, s = math.cos(r.psi), math.sin(r.psi)
    dx, dy = p[0] - r.x, p[1] - r.y
    return float(box_inclusion((c * dx + s * dy, -s * dx + c * dy), r.half))


def corner_value(vehicle: Rect, obstacle) -> float:
    """Avoidance level-set value of one pair: max cross corner inclusion (disk: overlap depth)."""
    if isinstance(obstacle, Disk):
        # disk obstacle against the vehicle's circumscribed disk
        return -(math.hypot(vehicle.x - obstacle.x, vehicle.y - obstacle.y)
                 - math.hypot(vehicle.lx, vehicle.ly) - obstacle.r)
    vals = [_inclusion(p, obstacle) for p in vehicle.corners()]
    vals += [_inclusion(p, vehicle) for p in obstacle.corners()]
    return max(vals)


def corner_condition(vehicle: Rect, obstacles: Sequence) -> bool:
    """True iff no corner of the vehicle lies in an obstacle and vice versa."""
    return all(corner_value(vehicle, ob) < 0 for ob in obstacles)


# -- time-step bound -----------------------------------------------------------


@dataclass(frozen=True)
class SafetyBound:
    d_under: float
    v_bar: float

    def __post_init__(self):
        if not self.d_under > 0:
            raise ValueError("minimal half-length must be positive")
        if self.v_bar < 0:
            raise ValueError("relative speed bound must be non-negative")

    @property
    def dt_max(self) -> float:
        return math.inf if self.v_bar == 0 else self.d_under / self.v_bar


def compute_safety_bound(vehicle_half, bounds: ControlBounds, obstacles: Sequence[ObstacleSpec],
                         v_max: float | GridSpec) -> SafetyBound:
    """Closed-form over-bound of the largest relative corner speed.

    ``v_max`` is the largest vehicle speed, or a grid whose ``v`` axis
    (index 3) bounds it.
    """
    if isinstance(v_max, GridSpec):
        ax = v_max.axes[3]
        v_max = max(abs(ax.lo), abs(ax.hi))
    lx, ly = (float(h) for h in vehicle_half)
    halves = [lx, ly]
    for ob in obstacles:
        halves += list(ob.half_lengths) if ob.shape == "rect" else [ob.radius]
    if min(halves) <= 0:
        raise ValueError("half-lengths must be positive")
    vehicle = abs(v_max) + bounds.w_max * math.hypot(lx, ly)
    other = max((ob.motion.speed_bound(ob.half_diag) for ob in obstacles), default=0.0)
    return SafetyBound(min(halves), vehicle + other)


@dataclass(frozen=True)
class Certificate:
    ok: bool
    failed: tuple[str, ...] = ()

    @property
    def reason(self) -> str:
        return "disjoint at next sample" if self.ok else "; ".join(self.failed)


def certify_step(vehicle_prev: Rect, obstacles_prev: Sequence, vehicle_next: Rect,
                 obstacles_next: Sequence, dt: float, bound: SafetyBound) -> Certificate:
    """Check the three hypotheses that carry disjointness from one sample to the next."""
    failed = []
    if any(shapes_intersect(vehicle_prev, ob) for ob in obstacles_prev):
        failed.append("not disjoint at previous sample")
    if not corner_condition(vehicle_next, obstacles_next):
        failed.append("corner condition fails at next sample")
    if not dt < bound.dt_max:
        failed.append("time-step too large")
    return Certificate(not failed, tuple(failed))


def interstep_distance_bound(d_tn: float, d_tn1: float, v_bar: float, dt: float) -> float:
    """Lower bound on the distance anywhere in ``[t_n, t_n + dt]``."""
    return min(d_tn, d_tn1) - v_bar * dt / 2


def secure_margin_check(g_tn: float, g_tn1: float, eps: float, v_bar: float, dt: float) -> bool:
    """Both samples at least ``eps`` inside the feasible side and ``dt/2 <= eps/v_bar``."""
    if eps <= 0:
        raise ValueError("margin must be positive")
    if max(g_tn, g_tn1) > -eps:
        return False
    return v_bar == 0 or dt / 2 <= eps / v_bar
