"""Experiment configuration: TOML (or JSON) files and the built-in presets."""

import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .forward import BoundaryCondition, Obstacle
from .geometry import builtin_curve, polar_grid

PRESETS = ("example1", "example2", "example3", "example4")
INDICATORS = ("I1", "I2", "I2hat", "ID", "IC")
DEFAULT_GRIDS = {
    "t1": {"r": [3.0, 10.0], "counts": [100, 300], "closed": "[)"},
    "t2": {"r": [10.0, 18.0], "counts": [100, 500], "closed": "(]"},
    "t3": {"r": [0.0, 3.0], "counts": [100, 500], "closed": "[)"},
}


@dataclass(frozen=True)
class ObstacleSpec:
    curve: str
    bc: str = "sound_soft"
    impedance: float = 0.0
    nodes: int = 256
    params: dict = field(default_factory=dict)

    def build(self):
        curve = builtin_curve(self.curve, **self.params)
        return curve, BoundaryCondition.parse(self.bc, self.impedance), self.nodes


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    k: float
    sources: tuple
    obstacle: tuple = ()
    noise: float = 0.05
    seed: int = 1
    receivers: int = 512
    radius: float = 10.0
    r1: float = 9.0
    r2: float = 18.0
    layer_nodes: int = 512
    grids: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_GRIDS)))
    aperture: Optional[tuple] = None
    aux_count: int = 12
    aux_radius: float = 5.0
    aux_in_aperture: bool = True
    far_radius: float = 200.0
    indicators: tuple = INDICATORS
    derivative_scale: float = 1.0
    peak_threshold: float = 0.5
    colormap: str = "viridis"
    overlay_boundary: bool = True
    measurements: Optional[str] = None

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        if self.noise < 0:
            raise ValueError("noise level must be non-negative")
        if not 0 < self.r1 < self.radius < self.r2 < self.far_radius:
            raise ValueError("radii must satisfy R1 < radius < R2 < far radius")
        if self.receivers < 8 or self.layer_nodes < 8 or self.layer_nodes % 2:
            raise ValueError("receiver and layer node counts must be >= 8 (layer nodes even)")
        if self.aperture is not None:
            a, b = self.aperture
            if not 0 <= a < b <= 2 * math.pi + 1e-12:
                raise ValueError("aperture must satisfy 0 <= a < b <= 2 pi")
        unknown = set(self.indicators) - set(INDICATORS)
        if unknown:
            raise ValueError(f"unknown indicators {sorted(unknown)}")
        for key in ("t1", "t2", "t3"):
            if key not in self.grids:
                raise ValueError(f"missing grid {key}")
        if self.aux_count < 0:
            raise ValueError("auxiliary source count must be non-negative")
        for spec in self.obstacle:
            spec.build()

    @property
    def source_points(self):
        return np.array(self.sources, dtype=float).reshape(-1, 2)

    def grid(self, key):
        g = self.grids[key]
        return polar_grid(g["r"], g["counts"], g.get("closed", "[)"))

    def build_obstacle(self):
        return Obstacle.from_curves([spec.build() for spec in self.obstacle])

    def aux_points(self):
        """M auxiliary sources equidistant on a circle (restricted to the aperture if asked)."""
        m = self.aux_count
        if m == 0:
            return np.zeros((0, 2))
        a, b = (0.0, 2 * math.pi)
        if self.aperture is not None and self.aux_in_aperture:
            a, b = self.aperture
        theta = a + (b - a) * np.arange(m) / m
        return self.aux_radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)

    def to_dict(self):
        d = asdict(self)
        d["sources"] = [list(map(float, p)) for p in self.sources]
        d["indicators"] = list(self.indicators)
        d["aperture"] = None if self.aperture is None else [float(v) for v in self.aperture]
        return d

    def with_overrides(self, **changes):
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def _sources(section):
    pts = []
    for r, deg in section.get("polar_deg", []):
        t = math.radians(deg)
        pts.append((r * math.cos(t), r * math.sin(t)))
    pts.extend(tuple(p) for p in section.get("points", []))
    return tuple((float(x), float(y)) for x, y in pts)


def _aperture(meas):
    if "aperture" in meas:
        return tuple(float(v) for v in meas["aperture"])
    if "aperture_deg" in meas:
        return tuple(math.radians(v) for v in meas["aperture_deg"])
    return None


def from_mapping(d) -> ExperimentConfig:
    """Build a config from the nested mapping used in TOML / JSON files."""
    known = {"name", "k", "noise", "seed", "indicators", "measurements", "sources",
             "obstacle", "measurement", "layers", "auxiliary", "grids", "far", "render",
             "regularization", "peaks", "description"}
    extra = set(d) - known
    if extra:
        raise ValueError(f"unknown configuration keys {sorted(extra)}")
    meas = d.get("measurement", {})
    layers = d.get("layers", {})
    aux = d.get("auxiliary", {})
    render = d.get("render", {})
    grids = json.loads(json.dumps(DEFAULT_GRIDS))
    for key, g in d.get("grids", {}).items():
        grids[key] = {**grids.get(key, {}), **g}
    obstacle = tuple(
        ObstacleSpec(o["curve"], o.get("bc", "sound_soft"), float(o.get("impedance", 0.0)),
                     int(o.get("nodes", 256)), dict(o.get("params", {})))
        for o in d.get("obstacle", []))
    return ExperimentConfig(
        name=str(d.get("name", "experiment")),
        k=float(d["k"]),
        sources=_sources(d.get("sources", {})),
        obstacle=obstacle,
        noise=float(d.get("noise", 0.05)),
        seed=int(d.get("seed", 1)),
        receivers=int(meas.get("receivers", 512)),
        radius=float(meas.get("radius", 10.0)),
        aperture=_aperture(meas),
        r1=float(layers.get("r1", 9.0)),
        r2=float(layers.get("r2", 18.0)),
        layer_nodes=int(layers.get("nodes", 512)),
        grids=grids,
        aux_count=int(aux.get("count", 12)),
        aux_radius=float(aux.get("radius", 5.0)),
        aux_in_aperture=bool(aux.get("in_aperture", True)),
        far_radius=float(d.get("far", {}).get("radius", 200.0)),
        indicators=tuple(d.get("indicators", INDICATORS)),
        derivative_scale=float(d.get("regularization", {}).get("derivative_scale", 1.0)),
        peak_threshold=float(d.get("peaks", {}).get("threshold_ratio", 0.5)),
        colormap=str(render.get("colormap", "viridis")),
        overlay_boundary=bool(render.get("boundary", True)),
        measurements=d.get("measurements"),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return from_mapping(json.loads(text))
    return from_mapping(tomllib.loads(text))


def load_preset(name) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("coinvert").joinpath("presets", f"{name}.toml").read_text()
    return from_mapping(tomllib.loads(text))


def parse_angle(text):
    """Parse '1.5', 'pi', '3pi/2', '1.5pi' into radians."""
    s = text.strip().lower().replace(" ", "")
    den = 1.0
    if "/" in s:
        s, d = s.split("/", 1)
        den = float(d)
    if s.endswith("pi"):
        head = s[:-2]
        val = (float(head) if head not in ("", "+") else 1.0) * math.pi
    else:
        val = float(s)
    return val / den


def parse_aperture(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError("aperture must be given as 'a,b'")
    return tuple(parse_angle(p) for p in parts)
