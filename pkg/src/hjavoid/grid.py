"""Uniform Cartesian grids, node fields and the finite-difference helpers.

Fields are stored as one flat row-major (C order) float64 array.  The
one-sided ENO2 derivatives use a linear ghost-node extension at the box
boundary, i.e. the outermost slope is extrapolated as a constant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_AXES = 5


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo >= self.hi:
            raise ValueError(f"axis {self.name!r}: need lo < hi, got [{self.lo}, {self.hi}]")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"axis {self.name!r}: need at least 2 nodes, got {self.n}")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def coords(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class GridSpec:
    axes: tuple[Axis, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not 1 <= len(self.axes) <= MAX_AXES:
            raise ValueError(f"grid needs 1..{MAX_AXES} axes, got {len(self.axes)}")

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float], n: Sequence[int],
                    names: Sequence[str] | None = None) -> "GridSpec":
        if names is None:
            names = [f"x{j + 1}" for j in range(len(lo))]
        return cls(tuple(Axis(str(nm), float(a), float(b), int(k))
                         for nm, a, b, k in zip(names, lo, hi, n, strict=True)))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.n for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def steps(self) -> np.ndarray:
        return np.array([a.step for a in self.axes])

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.steps))

    def axis_index(self, name: str) -> int:
        return self.names.index(name)

    def coords(self) -> list[np.ndarray]:
        """Per-axis coordinate vectors reshaped for broadcasting against the grid."""
        out = []
        for j, a in enumerate(self.axes):
            shp = [1] * self.ndim
            shp[j] = a.n
            out.append(a.coords().reshape(shp))
        return out

    def points(self) -> np.ndarray:
        """All node coordinates, shape (size, ndim), row-major order."""
        mesh = np.meshgrid(*[a.coords() for a in self.axes], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def contains(self, point: Sequence[float]) -> bool:
        return all(a.lo <= p <= a.hi for a, p in zip(self.axes, point, strict=True))

    def to_dict(self) -> dict:
        return {"axes": [{"name": a.name, "lo": a.lo, "hi": a.hi, "n": a.n} for a in self.axes]}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(tuple(Axis(str(a["name"]), float(a["lo"]), float(a["hi"]), int(a["n"]))
                         for a in d["axes"]))


@dataclass
class ScalarField:
    grid: GridSpec
    values: np.ndarray
    time_stamp: float = 0.0
    allow_inf: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        if self.values.size != self.grid.size:
            raise ValueError(f"field has {self.values.size} values, grid has {self.grid.size} nodes")
        bad = ~np.isfinite(self.values)
        if self.allow_inf:
            bad &= ~np.isposinf(self.values)
        if bad.any():
            raise ValueError("field contains non-finite values")

    def array(self) -> np.ndarray:
        """N-d view of the values."""
        return self.values.reshape(self.grid.shape)

    def at(self, multi_index: Sequence[int]) -> float:
        return float(self.array()[_check_index(self.grid, multi_index)])

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.time_stamp, self.allow_inf)


def _check_index(grid: GridSpec, multi_index: Sequence[int]) -> tuple[int, ...]:
    idx = tuple(int(i) for i in multi_index)
    if len(idx) != grid.ndim:
        raise IndexError(f"expected {grid.ndim} indices, got {len(idx)}")
    for i, a in zip(idx, grid.axes):
        if not 0 <= i < a.n:
            raise IndexError(f"index {i} out of range for axis {a.name!r} with {a.n} nodes")
    return idx


def node_coords(grid: GridSpec, multi_index: Sequence[int]) -> tuple[float, ...]:
    idx = _check_index(grid, multi_index)
    return tuple(a.lo + i * a.step for a, i in zip(grid.axes, idx))


def _eno_pick(a, b):
    return np.where(np.abs(a) <= np.abs(b), a, b)


def _extended_line(line: np.ndarray, pad: int = 2) -> np.ndarray:
    """Pad a 1-d profile with linearly extrapolated ghost values."""
    n = line.shape[-1]
    k = np.arange(1, pad + 1)
    left = line[..., :1] - k[::-1] * (line[..., 1:2] - line[..., :1])
    right = line[..., n - 1:n] + k * (line[..., n - 1:n] - line[..., n - 2:n - 1])
    return np.concatenate([left, line, right], axis=-1)


def eno2_derivatives(values: np.ndarray, axis: int, dx: float, order: int = 2):
    """Left/right one-sided derivative arrays along ``axis`` for an n-d array."""
    u = np.moveaxis(np.asarray(values, dtype=np.float64), axis, -1)
    e = _extended_line(u)
    um2, um1, u0, up1, up2 = (e[..., i:i + u.shape[-1]] for i in range(5))
    left = (u0 - um1) / dx
    right = (up1 - u0) / dx
    if order == 2:
        d2m = um2 - 2 * um1 + u0
        d20 = um1 - 2 * u0 + up1
        d2p = u0 - 2 * up1 + up2
        left = left + 0.5 / dx * _eno_pick(d2m, d20)
        right = right - 0.5 / dx * _eno_pick(d20, d2p)
    return np.moveaxis(left, -1, axis), np.moveaxis(right, -1, axis)


def eno2_one_sided(field: ScalarField, axis: int, multi_index: Sequence[int]) -> tuple[float, float]:
    """Second-order ENO left and right approximations of the derivative at one node."""
    idx = _check_index(field.grid, multi_index)
    arr = field.array()
    sel = list(idx)
    sel[axis] = slice(None)
    line = arr[tuple(sel)]
    left, right = eno2_derivatives(line, 0, field.grid.axes[axis].step)
    k = idx[axis]
    return float(left[k]), float(right[k])


def cfl_timestep(grid: GridSpec, sup_norms: Sequence[float], cfl_number: float = 0.5) -> float:
    """Largest step with ``dt * sum_j |f_j|_inf / dx_j <= cfl_number``."""
    norms = np.asarray(sup_norms, dtype=float)
    if norms.shape != (grid.ndim,):
        raise ValueError(f"need {grid.ndim} sup norms, got {norms.shape}")
    if np.any(norms < 0) or not np.all(np.isfinite(norms)):
        raise ValueError("sup norms must be finite and non-negative")
    if not 0 < cfl_number <= 1:
        raise ValueError("cfl_number must lie in (0, 1]")
    rate = float(np.sum(norms / grid.steps))
    if rate == 0.0:
        return math.inf
    return cfl_number / rate


def _coincident_index(coarse, fine, tol=1e-9):
    """Map coarse node coordinates onto fine node indices, or None."""
    pos = (coarse - fine[0]) / (fine[1] - fine[0])
    idx = np.rint(pos).astype(int)
    if np.all(np.abs(pos - idx) < tol) and idx.min() >= 0 and idx.max() < fine.size:
        return idx
    return None


def sample_on(reference: ScalarField, grid: GridSpec) -> np.ndarray:
    """Reference values at the nodes of ``grid``.

    Coinciding axes are sampled directly; the others are interpolated
    multilinearly.  Raises if ``grid`` is not covered by the reference box.
    """
    ref = reference.grid
    if ref.ndim != grid.ndim:
        raise ValueError("grids have different dimensions")
    arr = reference.array()
    for j, (a, b) in enumerate(zip(grid.axes, ref.axes)):
        if a.lo < b.lo - 1e-12 or a.hi > b.hi + 1e-12:
            raise ValueError(f"axis {a.name!r} of the field is not covered by the reference")
    # direct sampling first, interpolation only where needed
    for j, (a, b) in enumerate(zip(grid.axes, ref.axes)):
        idx = _coincident_index(a.coords(), b.coords())
        if idx is not None:
            arr = np.take(arr, idx, axis=j)
            continue
        xb = b.coords()
        xa = np.clip(a.coords(), b.lo, b.hi)
        k = np.clip(np.searchsorted(xb, xa, side="right") - 1, 0, b.n - 2)
        w = (xa - xb[k]) / (xb[k + 1] - xb[k])
        shp = [1] * arr.ndim
        shp[j] = a.n
        w = w.reshape(shp)
        arr = np.take(arr, k, axis=j) * (1 - w) + np.take(arr, k + 1, axis=j) * w
    return np.ascontiguousarray(arr).ravel()


def error_norms(field: ScalarField, reference: ScalarField) -> tuple[float, float, float]:
    """(L-inf, L1, L2) discrete errors of ``field`` against ``reference``.

    The L1/L2 norms are weighted by the cell volume of ``field``'s grid.
    """
    if field.grid == reference.grid:
        ref_vals = reference.values
    else:
        ref_vals = sample_on(reference, field.grid)
    e = field.values - ref_vals
    vol = field.grid.cell_volume
    return (float(np.max(np.abs(e))),
            float(vol * np.sum(np.abs(e))),
            float(math.sqrt(vol) * math.sqrt(float(np.sum(e * e)))))


def convergence_order(e_coarse: float, e_fine: float) -> float:
    if not (e_coarse > 0 and e_fine > 0):
        raise ValueError("convergence order needs strictly positive errors")
    return math.log(e_coarse / e_fine) / math.log(2.0)


def interpolate(field: ScalarField, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation at arbitrary points (clipped to the box)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    grid = field.grid
    arr = field.array()
    idx_lo, weights = [], []
    for j, a in enumerate(grid.axes):
        t = (np.clip(pts[:, j], a.lo, a.hi) - a.lo) / a.step
        k = np.clip(np.floor(t).astype(int), 0, a.n - 2)
        idx_lo.append(k)
        weights.append(t - k)
    out = np.zeros(len(pts))
    for corner in range(1 << grid.ndim):
        w = np.ones(len(pts))
        ind = []
        for j in range(grid.ndim):
            bit = (corner >> j) & 1
            ind.append(idx_lo[j] + bit)
            w = w * (weights[j] if bit else 1 - weights[j])
        out += w * arr[tuple(ind)]
    return out


# -- snapshot export ---------------------------------------------------------

def write_csv(field: ScalarField, path) -> None:
    """One node per line: ``i1..ik, x1..xk, value`` (+inf written as ``inf``)."""
    grid = field.grid
    k = grid.ndim
    header = [f"i{j + 1}" for j in range(k)] + [f"x{j + 1}" for j in range(k)] + ["value"]
    idx = np.indices(grid.shape).reshape(k, -1).T
    pts = grid.points()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for ii, xx, val in zip(idx, pts, field.values):
            w.writerow([*map(int, ii), *(repr(float(x)) for x in xx),
                        "inf" if np.isposinf(val) else repr(float(val))])


def read_csv(path, grid: GridSpec) -> ScalarField:
    vals = np.empty(grid.size)
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        next(rows)
        k = grid.ndim
        for row in rows:
            flat = np.ravel_multi_index(tuple(int(v) for v in row[:k]), grid.shape)
            vals[flat] = float(row[-1])
    return ScalarField(grid, vals, allow_inf=bool(np.isposinf(vals).any()))


def save_npz(field: ScalarField, path) -> None:
    g = field.grid
    np.savez(path, values=field.values, time_stamp=field.time_stamp,
             names=np.array(g.names), lo=[a.lo for a in g.axes],
             hi=[a.hi for a in g.axes], n=[a.n for a in g.axes])


def load_npz(path) -> ScalarField:
    with np.load(path) as d:
        grid = GridSpec.from_bounds(d["lo"], d["hi"], d["n"], [str(s) for s in d["names"]])
        vals = d["values"]
        return ScalarField(grid, vals, float(d["time_stamp"]),
                           allow_inf=bool(np.isposinf(vals).any()))
