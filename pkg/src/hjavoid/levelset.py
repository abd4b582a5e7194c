"""Level-set expressions for roads, targets and (moving) obstacles.

Convention: ``g(z, s) <= 0`` iff the state ``z`` satisfies the constraint at
time ``s``.  Expressions are immutable trees; leaves are primitive functions,
inner nodes are :class:`Max` (intersection) and :class:`Min` (union).

``z`` is any sequence indexed by state component (``z[0]=x, z[1]=y,
z[2]=psi, ...``); the components may be numpy arrays that broadcast against
each other, so a whole grid is evaluated in one call and a leaf only pays
for the axes it reads.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# -- obstacle motions ---------------------------------------------------------


@dataclass(frozen=True)
class FixedMotion:
    x: float
    y: float
    psi: float = 0.0
    kind = "fixed"

    def pose(self, s: float) -> tuple[float, float, float]:
        return self.x, self.y, self.psi

    def speed_bound(self, half_diag: float) -> float:
        return 0.0

    @property
    def is_static(self) -> bool:
        return True


@dataclass(frozen=True)
class LinearMotion:
    x0: float
    y0: float
    vx: float
    vy: float
    kind = "linear"

    def pose(self, s):
        return self.x0 + s * self.vx, self.y0 + s * self.vy, math.atan2(self.vy, self.vx)

    def speed_bound(self, half_diag):
        return math.hypot(self.vx, self.vy)

    @property
    def is_static(self):
        return self.vx == 0 and self.vy == 0


@dataclass(frozen=True)
class DeceleratingMotion:
    """Straight-line motion with constant deceleration until standstill."""

    x0: float
    y0: float
    heading: float
    speed: float
    decel: float
    kind = "decelerating"

    def __post_init__(self):
        if self.speed < 0 or self.decel <= 0:
            raise ValueError("decelerating motion needs speed >= 0 and decel > 0")

    @property
    def stop_time(self) -> float:
        return self.speed / self.decel

    def distance(self, s: float) -> float:
        s = min(max(s, 0.0), self.stop_time)
        return self.speed * s - 0.5 * self.decel * s * s

    def pose(self, s):
        d = self.distance(s)
        return (self.x0 + d * math.cos(self.heading),
                self.y0 + d * math.sin(self.heading), self.heading)

    def speed_bound(self, half_diag):
        return self.speed

    @property
    def is_static(self):
        return self.speed == 0


@dataclass(frozen=True)
class CircularMotion:
    cx: float
    cy: float
    radius: float
    theta0: float
    omega: float
    kind = "circular"

    def pose(self, s):
        th = self.theta0 + self.omega * s
        return (self.radius * math.cos(th) + self.cx,
                self.radius * math.sin(th) + self.cy, th - math.pi / 2)

    def speed_bound(self, half_diag):
        return abs(self.omega) * (self.radius + half_diag)

    @property
    def is_static(self):
        return self.omega == 0


MOTIONS = {m.kind: m for m in (FixedMotion, LinearMotion, DeceleratingMotion, CircularMotion)}


def motion_to_dict(m) -> dict:
    d = {"kind": m.kind}
    d.update({f: getattr(m, f) for f in m.__dataclass_fields__})
    return d


def motion_from_dict(d: dict):
    d = dict(d)
    cls = MOTIONS[d.pop("kind")]
    return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class ObstacleSpec:
    """A rectangle (``half_lengths``) or disk (``radius``) with a motion law."""

    motion: object
    half_lengths: tuple[float, float] | None = None
    radius: float | None = None

    def __post_init__(self):
        if (self.half_lengths is None) == (self.radius is None):
            raise ValueError("obstacle is either a rectangle or a disk")
        if self.half_lengths is not None:
            hl = tuple(float(h) for h in self.half_lengths)
            if len(hl) != 2 or min(hl) <= 0:
                raise ValueError("rectangle half-lengths must be two positive numbers")
            object.__setattr__(self, "half_lengths", hl)
        elif self.radius <= 0:
            raise ValueError("disk radius must be positive")

    @property
    def shape(self) -> str:
        return "rect" if self.half_lengths is not None else "disk"

    def pose(self, s: float):
        return self.motion.pose(s)

    @property
    def half_diag(self) -> float:
        if self.half_lengths is None:
            return self.radius
        return math.hypot(*self.half_lengths)

    def to_dict(self) -> dict:
        d = {"motion": motion_to_dict(self.motion)}
        if self.half_lengths is not None:
            d["half_lengths"] = list(self.half_lengths)
        else:
            d["radius"] = self.radius
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ObstacleSpec":
        hl = d.get("half_lengths")
        return cls(motion_from_dict(d["motion"]),
                   tuple(float(h) for h in hl) if hl is not None else None,
                   float(d["radius"]) if d.get("radius") is not None else None)


def motion_pose(obstacle, s: float) -> tuple[float, float, float]:
    """Pose ``(x, y, psi)`` of an obstacle (or bare motion law) at time ``s``."""
    return obstacle.pose(s)


# -- expression tree ------------------------------------------------------------


class LevelSet:
    time_dependent = False

    def __call__(self, z, s: float = 0.0):
        raise NotImplementedError

    def children(self) -> tuple["LevelSet", ...]:
        return ()


@dataclass(frozen=True)
class Max(LevelSet):
    """Intersection of the operand feasible sets."""

    terms: tuple[LevelSet, ...]

    def __call__(self, z, s=0.0):
        return functools.reduce(np.maximum, (t(z, s) for t in self.terms))

    @property
    def time_dependent(self):
        return any(t.time_dependent for t in self.terms)

    def children(self):
        return self.terms


@dataclass(frozen=True)
class Min(LevelSet):
    """Union of the operand feasible sets."""

    terms: tuple[LevelSet, ...]

    def __call__(self, z, s=0.0):
        return functools.reduce(np.minimum, (t(z, s) for t in self.terms))

    @property
    def time_dependent(self):
        return any(t.time_dependent for t in self.terms)

    def children(self):
        return self.terms


def combine_max(*terms: LevelSet) -> LevelSet:
    return Max(tuple(terms))


def combine_min(*terms: LevelSet) -> LevelSet:
    return Min(tuple(terms))


@dataclass(frozen=True)
class Constant(LevelSet):
    value: float

    def __call__(self, z, s=0.0):
        return np.float64(self.value)


@dataclass(frozen=True)
class Linear(LevelSet):
    """Half-space ``coeff * (z[axis] - offset) <= 0``."""

    axis: int
    coeff: float
    offset: float

    def __call__(self, z, s=0.0):
        return self.coeff * (z[self.axis] - self.offset)


@dataclass(frozen=True)
class AngleBand(LevelSet):
    """``|z[axis] - center| - tol``; yaw tolerance band."""

    center: float
    tol: float
    axis: int = 2

    def __call__(self, z, s=0.0):
        return np.abs(z[self.axis] - self.center) - self.tol


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class AnnulusSector(LevelSet):
    """Road arc ``r_down <= rho <= r_up``, ``theta_min <= Theta <= theta_max``.

    The polar angle is taken on the branch centred on the sector's mid-angle,
    which keeps the function continuous across the branch cut.
    """

    cx: float
    cy: float
    r_down: float
    r_up: float
    theta_min: float
    theta_max: float

    def __post_init__(self):
        if not 0 < self.r_down < self.r_up:
            raise ValueError("curved road needs 0 < r_down < r_up")
        if not self.theta_min < self.theta_max <= self.theta_min + 2 * math.pi:
            raise ValueError("curved road needs theta_min < theta_max <= theta_min + 2 pi")

    def __call__(self, z, s=0.0):
        dx = z[0] - self.cx
        dy = z[1] - self.cy
        rho = np.hypot(dx, dy)
        radial = np.maximum(rho - self.r_up, -(rho - self.r_down))
        mid = 0.5 * (self.theta_min + self.theta_max)
        half = 0.5 * (self.theta_max - self.theta_min)
        # max(Theta - theta_max, -(Theta - theta_min)) with Theta in [mid - pi, mid + pi)
        angular = np.abs(_wrap(np.arctan2(dy, dx) - mid)) - half
        # Theta is undefined at the centre; the radial terms alone decide there
        return np.where(rho > 0, np.maximum(radial, angular), radial)

    def polar_angle(self, x, y):
        mid = 0.5 * (self.theta_min + self.theta_max)
        return mid + _wrap(np.arctan2(y - self.cy, x - self.cx) - mid)


def straight_road(y_down: float, y_up: float) -> LevelSet:
    return Max((Linear(1, -1.0, y_down), Linear(1, 1.0, y_up)))


def varying_width_road(y_up: float, y_down1: float, y_down2: float, x_bar: float) -> LevelSet:
    return Max((Min((Linear(1, -1.0, y_down1), Linear(0, -1.0, x_bar))),
                Linear(1, -1.0, y_down2),
                Linear(1, 1.0, y_up)))


def curved_road(center: Sequence[float], r_down: float, r_up: float,
                theta_min: float, theta_max: float) -> LevelSet:
    return AnnulusSector(float(center[0]), float(center[1]), r_down, r_up, theta_min, theta_max)


def crossing_road(xs: Sequence[float], ys: Sequence[float]) -> LevelSet:
    """Crossing with inner corner points ``(xs[i], ys[i])``, i = 0 (upper right),
    1 (upper left), 2 (lower left), 3 (lower right)."""
    x0, x1, x2, x3 = xs
    y0, y1, y2, y3 = ys
    return Max((Min((Linear(0, 1.0, x0), Linear(1, 1.0, y0))),
                Min((Linear(1, 1.0, y1), Linear(0, -1.0, x1))),
                Min((Linear(0, -1.0, x2), Linear(1, -1.0, y2))),
                Min((Linear(1, -1.0, y3), Linear(0, 1.0, x3)))))


def target_box(x_min=None, x_max=None, y_min=None, y_max=None,
               psi_center: float | None = 0.0, psi_tol: float = 0.1) -> LevelSet:
    """Box in (x, y) with a yaw band; ``None`` bounds are left open."""
    terms: list[LevelSet] = []
    if x_min is not None:
        terms.append(Linear(0, -1.0, x_min))
    if x_max is not None:
        terms.append(Linear(0, 1.0, x_max))
    if y_min is not None:
        terms.append(Linear(1, -1.0, y_min))
    if y_max is not None:
        terms.append(Linear(1, 1.0, y_max))
    if psi_center is not None:
        terms.append(AngleBand(psi_center, psi_tol))
    if not terms:
        raise ValueError("target box needs at least one bound")
    return Max(tuple(terms))


# -- obstacle avoidance ------------------------------------------------------------

_SIGNS = ((1, 1), (-1, 1), (1, -1), (-1, -1))


def rect_corners(center, yaw, half_lengths):
    """Corners ``X + R(yaw) T_j l`` for j = 1..4 as a list of (x, y) pairs."""
    c, s = np.cos(yaw), np.sin(yaw)
    lx, ly = half_lengths
    out = []
    for sx, sy in _SIGNS:
        ox, oy = sx * lx, sy * ly
        out.append((center[0] + c * ox - s * oy, center[1] + s * ox + c * oy))
    return out


def box_inclusion(X, half_lengths):
    """``min(lx - |x|, ly - |y|)``: >= 0 inside the box, < 0 outside."""
    return np.minimum(half_lengths[0] - np.abs(X[0]), half_lengths[1] - np.abs(X[1]))


def _inclusion_in_frame(px, py, cx, cy, yaw, half_lengths):
    c, s = np.cos(yaw), np.sin(yaw)
    dx, dy = px - cx, py - cy
    return box_inclusion((c * dx + s * dy, -s * dx + c * dy), half_lengths)


@dataclass(frozen=True)
class RectAvoidance(LevelSet):
    """Corner-inclusion avoidance function for a rectangular vehicle."""

    vehicle_half: tuple[float, float]
    obstacles: tuple[ObstacleSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if any(o.shape != "rect" for o in self.obstacles):
            raise ValueError("rectangle avoidance needs rectangular obstacles")
        if not self.obstacles:
            raise ValueError("no obstacles given")

    @property
    def time_dependent(self):
        return any(not o.motion.is_static for o in self.obstacles)

    def per_obstacle(self, z, s=0.0):
        x, y, psi = z[0], z[1], z[2]
        vcorners = rect_corners((x, y), psi, self.vehicle_half)
        out = []
        for ob in self.obstacles:
            ox, oy, opsi = ob.pose(s)
            terms = [_inclusion_in_frame(px, py, ox, oy, opsi, ob.half_lengths) for px, py in vcorners]
            for px, py in rect_corners((ox, oy), opsi, ob.half_lengths):
                terms.append(_inclusion_in_frame(px, py, x, y, psi, self.vehicle_half))
            out.append(functools.reduce(np.maximum, terms))
        return out

    def __call__(self, z, s=0.0):
        return functools.reduce(np.maximum, self.per_obstacle(z, s))


@dataclass(frozen=True)
class DiskAvoidance(LevelSet):
    """``max_i -(|X - X_i(s)| - r - r_i)`` for a disk vehicle of radius ``r``."""

    vehicle_radius: float
    obstacles: tuple[ObstacleSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if any(o.shape != "disk" for o in self.obstacles):
            raise ValueError("disk avoidance needs disk obstacles")
        if not self.obstacles:
            raise ValueError("no obstacles given")

    @property
    def time_dependent(self):
        return any(not o.motion.is_static for o in self.obstacles)

    def __call__(self, z, s=0.0):
        terms = []
        for ob in self.obstacles:
            ox, oy, _ = ob.pose(s)
            terms.append(-(np.hypot(z[0] - ox, z[1] - oy) - self.vehicle_radius - ob.radius))
        return functools.reduce(np.maximum, terms)


def rect_avoidance(vehicle_half, obstacles) -> LevelSet:
    return RectAvoidance(tuple(float(h) for h in vehicle_half), tuple(obstacles))


def disk_avoidance(obstacles, vehicle_radius: float) -> LevelSet:
    return DiskAvoidance(float(vehicle_radius), tuple(obstacles))


def evaluate_on_grid(expr: LevelSet, grid, s: float = 0.0) -> np.ndarray:
    """Full-grid array of ``expr`` (broadcast over axes it does not read)."""
    coords = grid.coords()
    return np.ascontiguousarray(np.broadcast_to(expr(coords, s), grid.shape), dtype=np.float64)
