"""Scenario configuration: dataclasses, YAML round-trip and the built-in catalog."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from ..collision import obstacle_shape, shapes_intersect, vehicle_rect
from ..dynamics import ControlBounds
from ..grid import GridSpec
from ..levelset import (LevelSet, ObstacleSpec, combine_max, combine_min, crossing_road,
                        curved_road, disk_avoidance, rect_avoidance, straight_road, target_box,
                        varying_width_road)


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


ROAD_KINDS = {
    "straight": ("y_down", "y_up"),
    "varying": ("y_up", "y_down1", "y_down2", "x_bar"),
    "curved": ("center", "r_down", "r_up", "theta_min", "theta_max"),
    "crossing": ("xs", "ys"),
    "none": (),
}


@dataclass
class RoadConfig:
    kind: str = "straight"
    params: dict = field(default_factory=dict)

    def build(self) -> LevelSet | None:
        if self.kind not in ROAD_KINDS:
            raise ConfigError(f"unknown road kind {self.kind!r}; expected one of {sorted(ROAD_KINDS)}")
        missing = [k for k in ROAD_KINDS[self.kind] if k not in self.params]
        if missing:
            raise ConfigError(f"road {self.kind!r} is missing {missing}")
        p = self.params
        if self.kind == "straight":
            return straight_road(p["y_down"], p["y_up"])
        if self.kind == "varying":
            return varying_width_road(p["y_up"], p["y_down1"], p["y_down2"], p["x_bar"])
        if self.kind == "curved":
            return curved_road(p["center"], p["r_down"], p["r_up"], p["theta_min"], p["theta_max"])
        if self.kind == "crossing":
            return crossing_road(p["xs"], p["ys"])
        return None


@dataclass
class TargetBox:
    x_min: float | None = None
    x_max: float | None = None
    y_min: float | None = None
    y_max: float | None = None
    psi_center: float | None = 0.0
    psi_tol: float = 0.1

    def build(self) -> LevelSet:
        return target_box(self.x_min, self.x_max, self.y_min, self.y_max, self.psi_center, self.psi_tol)


@dataclass
class VehicleConfig:
    half_lengths: tuple[float, float] = (1.0, 1.0)
    initial_state: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    bounds: ControlBounds = field(default_factory=ControlBounds)


@dataclass
class ReconstructionConfig:
    h: float = 0.02
    eta: float | None = None        # None: 1.5 position steps at the initial speed
    n_a: int = 21
    n_w: int = 21
    substeps: int = 1
    max_steps: int = 1000
    margin: float = 0.2
    n_clock: int = 11               # clock nodes when moving obstacles need the 5-d model
    penalty: float | None = None    # time assigned to unreachable corners; None: twice the horizon


@dataclass
class OutputConfig:
    snapshot_times: tuple[float, ...] = ()
    slice_psi: float = 0.0
    slice_v: float = 35.0


@dataclass
class ScenarioConfig:
    name: str
    grid: GridSpec
    horizon: float
    vehicle: VehicleConfig
    road: RoadConfig = field(default_factory=RoadConfig)
    obstacles: tuple[ObstacleSpec, ...] = ()
    targets: tuple[TargetBox, ...] = (TargetBox(),)
    mode: str = "capture"
    cfl: float = 0.5
    reconstruction: ReconstructionConfig = field(default_factory=ReconstructionConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    description: str = ""

    # -- expressions -------------------------------------------------------------

    def road_expr(self) -> LevelSet | None:
        return self.road.build()

    def obstacle_expr(self) -> LevelSet | None:
        rects = [o for o in self.obstacles if o.shape == "rect"]
        disks = [o for o in self.obstacles if o.shape == "disk"]
        terms = []
        if rects:
            terms.append(rect_avoidance(self.vehicle.half_lengths, rects))
        if disks:
            terms.append(disk_avoidance(disks, math.hypot(*self.vehicle.half_lengths)))
        if not terms:
            return None
        return terms[0] if len(terms) == 1 else combine_max(*terms)

    def constraint_expr(self) -> LevelSet | None:
        terms = [t for t in (self.road_expr(), self.obstacle_expr()) if t is not None]
        if not terms:
            return None
        return terms[0] if len(terms) == 1 else combine_max(*terms)

    def target_expr(self) -> LevelSet:
        boxes = [t.build() for t in self.targets]
        return boxes[0] if len(boxes) == 1 else combine_min(*boxes)

    @property
    def time_dependent(self) -> bool:
        return any(not o.motion.is_static for o in self.obstacles)

    # -- checks ------------------------------------------------------------------

    def validate(self) -> "ScenarioConfig":
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if self.grid.ndim != 4:
            raise ConfigError("scenario grids have the four axes (x, y, psi, v)")
        if self.mode not in ("capture", "exact"):
            raise ConfigError(f"mode must be 'capture' or 'exact', got {self.mode!r}")
        if not self.targets:
            raise ConfigError("at least one target box is required")
        z0 = self.vehicle.initial_state
        if not self.grid.contains(z0):
            raise ConfigError(f"initial state {tuple(z0)} lies outside the grid box")
        veh = vehicle_rect(z0, self.vehicle.half_lengths)
        for i, ob in enumerate(self.obstacles):
            if shapes_intersect(veh, obstacle_shape(ob, 0.0)):
                raise ConfigError(f"initial vehicle pose overlaps obstacle {i}")
        self.road.build()
        return self

    # -- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        v = self.vehicle
        return {
            "name": self.name,
            "description": self.description,
            "horizon": self.horizon,
            "mode": self.mode,
            "cfl": self.cfl,
            "grid": self.grid.to_dict()["axes"],
            "vehicle": {"half_lengths": list(v.half_lengths), "initial_state": list(v.initial_state),
                        "controls": asdict(v.bounds)},
            "road": {"kind": self.road.kind, **self.road.params},
            "obstacles": [o.to_dict() for o in self.obstacles],
            "targets": [asdict(t) for t in self.targets],
            "reconstruction": asdict(self.reconstruction),
            "output": {**asdict(self.output), "snapshot_times": list(self.output.snapshot_times)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        try:
            veh = d["vehicle"]
            road = dict(d.get("road", {"kind": "none"}))
            kind = road.pop("kind")
            road = {k: (list(v) if isinstance(v, (list, tuple)) else float(v)) for k, v in road.items()}
            recon = _fill(ReconstructionConfig, d.get("reconstruction", {}))
            out = _fill(OutputConfig, d.get("output", {}))
            out.snapshot_times = tuple(float(t) for t in out.snapshot_times)
            cfg = cls(
                name=str(d["name"]),
                description=str(d.get("description", "")),
                grid=GridSpec.from_dict({"axes": d["grid"]}),
                horizon=float(d["horizon"]),
                mode=str(d.get("mode", "capture")),
                cfl=float(d.get("cfl", 0.5)),
                vehicle=VehicleConfig(tuple(float(h) for h in veh["half_lengths"]),
                                      tuple(float(s) for s in veh["initial_state"]),
                                      ControlBounds(**{k: float(x) for k, x in veh.get("controls", {}).items()})),
                road=RoadConfig(kind, road),
                obstacles=tuple(ObstacleSpec.from_dict(o) for o in d.get("obstacles", []) or []),
                targets=tuple(_fill(TargetBox, t) for t in d.get("targets", [{}])),
                reconstruction=recon,
                output=out,
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scenario config: {exc!r}") from exc
        return cfg


def _fill(cls, d: dict):
    known = {f.name for f in fields(cls)}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(extra)}")
    return cls(**d)


def dump_yaml(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def load_yaml(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("scenario file must contain a mapping")
    return ScenarioConfig.from_dict(data)


def load_config(path) -> ScenarioConfig:
    """Load a YAML scenario file, or a built-in scenario by name."""
    p = Path(path)
    if not p.exists() and str(path) in builtin_names():
        return builtin_scenario(str(path))
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return load_yaml(text).validate()


def builtin_names() -> list[str]:
    files = resources.files(__package__).joinpath("data")
    return sorted(f.name[:-5] for f in files.iterdir() if f.name.endswith(".yaml"))


def builtin_path(name: str):
    return resources.files(__package__).joinpath("data", f"{name}.yaml")


def builtin_scenario(name: str) -> ScenarioConfig:
    names = builtin_names()
    if name not in names:
        raise ConfigError(f"unknown scenario {name!r}; available: {', '.join(names)}")
    return load_yaml(builtin_path(name).read_text()).validate()


def with_resolution(cfg: ScenarioConfig, nx: int, ny: int) -> ScenarioConfig:
    """Copy of ``cfg`` with a different number of (x, y) nodes."""
    ax = cfg.grid.axes
    grid = GridSpec((type(ax[0])(ax[0].name, ax[0].lo, ax[0].hi, nx),
                     type(ax[1])(ax[1].name, ax[1].lo, ax[1].hi, ny)) + ax[2:])
    d = ScenarioConfig.from_dict(cfg.to_dict())
    d.grid = grid
    return d


def as_plain(value: Any) -> Any:
    """Recursively convert tuples to lists (for comparisons after a YAML round-trip)."""
    if isinstance(value, (list, tuple)):
        return [as_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: as_plain(v) for k, v in value.items()}
    return value
