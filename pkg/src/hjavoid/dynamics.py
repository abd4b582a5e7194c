"""Point-mass vehicle model and its Hamiltonians.

All dynamics used by the solver have a *box velocity set*: every control
acts on exactly one state component, so ``f_j(z, U) = [lo_j(z), hi_j(z)]``
independently per axis.  The Hamiltonian then separates into a sum of
one-dimensional maxima, which is what the grid kernel consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .grid import GridSpec


class State4(NamedTuple):
    x: float
    y: float
    psi: float
    v: float


class Control(NamedTuple):
    a: float
    w: float


@dataclass(frozen=True)
class ControlBounds:
    a_min: float = -10.0
    a_max: float = 10.0
    w_max: float = 1.0

    def __post_init__(self):
        if self.a_min > self.a_max:
            raise ValueError("a_min must not exceed a_max")
        if self.w_max < 0:
            raise ValueError("w_max must be non-negative")

    def contains(self, u: Control, tol: float = 0.0) -> bool:
        return (self.a_min - tol <= u[0] <= self.a_max + tol) and abs(u[1]) <= self.w_max + tol

    def grid(self, n_a: int = 21, n_w: int = 21) -> np.ndarray:
        """Tensor control grid, shape (n_a * n_w, 2), ``a`` varying slowest."""
        if n_a < 1 or n_w < 1:
            raise ValueError("control grid needs at least one value per axis")
        a = np.linspace(self.a_min, self.a_max, n_a) if n_a > 1 else np.array([0.5 * (self.a_min + self.a_max)])
        w = np.linspace(-self.w_max, self.w_max, n_w) if n_w > 1 else np.array([0.0])
        A, W = np.meshgrid(a, w, indexing="ij")
        return np.stack([A.ravel(), W.ravel()], axis=1)


def point_mass_rhs(z, u):
    """(v cos psi, v sin psi, w, a); accepts scalars or broadcastable arrays."""
    _, _, psi, v = z[0], z[1], z[2], z[3]
    a, w = u[0], u[1]
    if np.ndim(psi) == 0 and np.ndim(v) == 0 and np.ndim(a) == 0 and np.ndim(w) == 0:
        return State4(v * math.cos(psi), v * math.sin(psi), float(w), float(a))
    return np.stack(np.broadcast_arrays(v * np.cos(psi), v * np.sin(psi),
                                        np.asarray(w, float) + 0 * v, np.asarray(a, float) + 0 * v))


def augmented_rhs(xi, u):
    """Point-mass derivative with an extra clock component that always runs at 1."""
    d = point_mass_rhs(xi[:4], u)
    if isinstance(d, tuple):
        return (*d, 1.0)
    return np.concatenate([d, np.ones((1,) + d.shape[1:])])


def hamiltonian(z, p, bounds: ControlBounds):
    """max over U of -f(z, u).p, in closed form (bang-bang per control)."""
    psi, v = z[2], z[3]
    p1, p2, p3, p4 = p[0], p[1], p[2], p[3]
    return (-v * np.cos(psi) * p1 - v * np.sin(psi) * p2
            + bounds.w_max * np.abs(p3)
            + np.maximum(-bounds.a_min * p4, -bounds.a_max * p4))


def capture_hamiltonian(z, p, bounds: ControlBounds):
    # lambda in [0, 1] scales f, so the max over lambda clamps at zero
    return np.maximum(0.0, hamiltonian(z, p, bounds))


def argmax_control(z, p, bounds: ControlBounds) -> Control:
    """A control attaining the maximum in :func:`hamiltonian`."""
    a = bounds.a_min if p[3] > 0 else bounds.a_max
    w = bounds.w_max if p[2] < 0 else -bounds.w_max
    return Control(a, w)


def _range_abs_max(lo, hi, fn, peaks):
    best = max(abs(fn(lo)), abs(fn(hi)))
    for c in peaks:
        if lo <= c <= hi:
            best = max(best, abs(fn(c)))
    return best


def sup_norms_on_domain(grid: GridSpec, bounds: ControlBounds) -> np.ndarray:
    """Per-axis sup of |f_j| over the (x, y, psi, v) box and all controls."""
    if grid.ndim < 4:
        raise ValueError("point-mass grid needs axes (x, y, psi, v)")
    pa, va = grid.axes[2], grid.axes[3]
    vmax = max(abs(va.lo), abs(va.hi))
    kmin = math.floor(pa.lo / (math.pi / 2)) - 1
    kmax = math.ceil(pa.hi / (math.pi / 2)) + 1
    peaks = [k * math.pi / 2 for k in range(kmin, kmax + 1)]
    c = _range_abs_max(pa.lo, pa.hi, math.cos, peaks)
    s = _range_abs_max(pa.lo, pa.hi, math.sin, peaks)
    norms = [vmax * c, vmax * s, bounds.w_max, max(abs(bounds.a_min), abs(bounds.a_max))]
    norms += [1.0] * (grid.ndim - 4)  # clock axis of the augmented model
    return np.array(norms)


class BoxDynamics:
    """Interface consumed by the HJB solver."""

    ndim: int

    def velocity_bounds(self, coords: Sequence[np.ndarray]) -> list[tuple[np.ndarray, np.ndarray]]:
        raise NotImplementedError

    def sup_norms(self, grid: GridSpec) -> np.ndarray:
        raise NotImplementedError

    def rhs(self, z, u):
        raise NotImplementedError


@dataclass(frozen=True)
class PointMass(BoxDynamics):
    bounds: ControlBounds = ControlBounds()
    ndim: int = 4

    def velocity_bounds(self, coords):
        psi, v = coords[2], coords[3]
        b = self.bounds
        fx = v * np.cos(psi)
        fy = v * np.sin(psi)
        w = np.float64(b.w_max)
        return [(fx, fx), (fy, fy), (-w, w), (np.float64(b.a_min), np.float64(b.a_max))]

    def sup_norms(self, grid):
        return sup_norms_on_domain(grid, self.bounds)

    def rhs(self, z, u):
        return point_mass_rhs(z, u)

    def hamiltonian(self, z, p):
        return hamiltonian(z, p, self.bounds)


@dataclass(frozen=True)
class AugmentedPointMass(PointMass):
    """Point mass plus a physical clock axis (state ``(x, y, psi, v, t)``)."""

    ndim: int = 5
    clock_axes = (4,)

    def velocity_bounds(self, coords):
        one = np.float64(1.0)
        return super().velocity_bounds(coords) + [(one, one)]

    def rhs(self, z, u):
        return augmented_rhs(z, u)


@dataclass(frozen=True)
class ConstantDrift(BoxDynamics):
    """Uncontrolled constant velocity, ``z' = c``; used for scheme checks."""

    velocity: tuple[float, ...]

    @property
    def ndim(self) -> int:
        return len(self.velocity)

    def velocity_bounds(self, coords):
        return [(np.float64(c), np.float64(c)) for c in self.velocity]

    def sup_norms(self, grid):
        return np.abs(np.array(self.velocity, dtype=float))

    def rhs(self, z, u=None):
        return tuple(self.velocity)
