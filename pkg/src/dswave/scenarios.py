"""Scenario configuration: strict TOML parsing, presets and problem assembly."""
from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .core import (
    BoundaryCondition,
    Grid,
    Problem,
    ScalarField,
    constant_source,
    derive_parameters,
    validate_problem,
)
from .errors import DomainError, ParseError, ValidationError
from .raster import read_csv_grid, read_esri_ascii
from .timestepper import Scheme, StepControl

__all__ = [
    "ScenarioConfig",
    "load_config",
    "config_from_dict",
    "preset_config",
    "PRESETS",
    "build_problem",
    "build_control",
    "barenblatt_profile",
]


@dataclass
class ParametersBlock:
    alpha: float = 5.0 / 3.0
    gamma: float = 0.5
    n: int = 2
    sigma: Optional[float] = None


@dataclass
class GridBlock:
    cells: list = field(default_factory=lambda: [32, 32])
    extent: list = field(default_factory=lambda: [1.0, 1.0])
    origin: Optional[list] = None


@dataclass
class TopographyBlock:
    preset: str = "flat"  # flat | slope | bump | file
    amplitude: float = 0.1
    file: Optional[str] = None
    format: Optional[str] = None  # asc | csv


@dataclass
class InitialBlock:
    preset: str = "dam_break"  # dam_break | lake_at_rest | bump | dry | barenblatt | file
    level: float = 1.0
    position: float = 0.5
    radius: float = 0.2
    t0: float = 1.0
    constant: float = 1.0
    file: Optional[str] = None
    format: Optional[str] = None


@dataclass
class SourceBlock:
    kind: str = "zero"  # zero | constant | file
    rate: float = 0.0
    file: Optional[str] = None


@dataclass
class SteppingBlock:
    scheme: str = "SemiImplicit"
    cfl: float = 0.4
    eps: float = 1e-8
    T: float = 1.0
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    store_every: int = 1
    max_newton_iters: int = 50
    newton_tol: float = 1e-10


@dataclass
class OutputsBlock:
    dir: str = "out"
    energy_report: str = "energy_report.json"
    certificate: str = "certificate.json"


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    boundary: str = "ZeroFlux"
    seed: int = 0
    parameters: ParametersBlock = field(default_factory=ParametersBlock)
    grid: GridBlock = field(default_factory=GridBlock)
    topography: TopographyBlock = field(default_factory=TopographyBlock)
    initial: InitialBlock = field(default_factory=InitialBlock)
    source: SourceBlock = field(default_factory=SourceBlock)
    stepping: SteppingBlock = field(default_factory=SteppingBlock)
    outputs: OutputsBlock = field(default_factory=OutputsBlock)
    base_dir: str = "."

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p


_BLOCKS = {
    "parameters": ParametersBlock,
    "grid": GridBlock,
    "topography": TopographyBlock,
    "initial": InitialBlock,
    "source": SourceBlock,
    "stepping": SteppingBlock,
    "outputs": OutputsBlock,
}
_TOP_KEYS = {"name", "boundary", "seed"}


def _coerce(value, default, key):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ParseError(f"key {key!r}: expected a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"key {key!r}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"key {key!r}: expected a number, got {value!r}")
        return float(value)
    return value


def config_from_dict(data: dict, base_dir: str = ".") -> ScenarioConfig:
    """Build a config from a parsed mapping; unknown keys raise :class:`ParseError`."""
    data = copy.deepcopy(data)
    cfg = ScenarioConfig(base_dir=str(base_dir))
    for key, value in data.items():
        if key in _BLOCKS:
            if not isinstance(value, dict):
                raise ParseError(f"[{key}] must be a table")
            block = _BLOCKS[key]()
            allowed = {f.name for f in dataclasses.fields(block)}
            for sub, subval in value.items():
                if sub not in allowed:
                    raise ParseError(f"unknown key {key}.{sub!r} (allowed: {sorted(allowed)})")
                setattr(block, sub, _coerce(subval, getattr(block, sub), f"{key}.{sub}"))
            setattr(cfg, key, block)
        elif key in _TOP_KEYS:
            setattr(cfg, key, _coerce(value, getattr(cfg, key), key))
        else:
            raise ParseError(f"unknown key {key!r}")
    violations = check_config(cfg)
    if violations:
        raise ValidationError(violations)
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return config_from_dict(data, base_dir=str(path.parent))


def check_config(cfg: ScenarioConfig) -> list:
    """All violations found while assembling the problem, as strings."""
    out = []
    p = cfg.parameters
    try:
        derive_parameters(p.alpha, p.gamma, p.n, p.sigma)
    except (DomainError, ValueError, TypeError) as exc:
        out.append(str(exc))
    if len(cfg.grid.cells) != p.n or len(cfg.grid.extent) != p.n:
        out.append(f"grid.cells/extent must have n={p.n} entries")
    try:
        BoundaryCondition.parse(cfg.boundary)
    except DomainError as exc:
        out.append(str(exc))
    try:
        Scheme.parse(cfg.stepping.scheme)
    except DomainError as exc:
        out.append(str(exc))
    if cfg.topography.preset not in ("flat", "slope", "bump", "file"):
        out.append(f"unknown topography preset {cfg.topography.preset!r}")
    if cfg.initial.preset not in ("dam_break", "lake_at_rest", "bump", "dry", "barenblatt", "file"):
        out.append(f"unknown initial preset {cfg.initial.preset!r}")
    if cfg.source.kind not in ("zero", "constant", "file"):
        out.append(f"unknown source kind {cfg.source.kind!r}")
    for label, block in (("topography", cfg.topography), ("initial", cfg.initial), ("source", cfg.source)):
        wants_file = getattr(block, "preset", getattr(block, "kind", None)) == "file"
        if wants_file:
            if not block.file:
                out.append(f"{label}.file is required")
            elif not cfg.resolve(block.file).exists():
                out.append(f"{label}.file {block.file!r} does not exist")
    if out:
        return out
    try:
        problem = build_problem(cfg)
        build_control(cfg)
    except (DomainError, ParseError, OSError, ValueError, TypeError) as exc:
        return [str(exc)]
    return validate_problem(problem)


def _grid(cfg: ScenarioConfig) -> Grid:
    g = cfg.grid
    return Grid(tuple(g.cells), tuple(g.extent), tuple(g.origin) if g.origin is not None else None)


def _read_field(cfg: ScenarioConfig, path: str, fmt: Optional[str], grid: Grid) -> np.ndarray:
    full = cfg.resolve(path)
    fmt = (fmt or full.suffix.lstrip(".")).lower()
    if fmt == "asc":
        fgrid, values = read_esri_ascii(full)
        if fgrid.cells != grid.cells:
            raise ParseError(f"{path}: raster is {fgrid.cells}, config grid is {grid.cells}")
        return values
    if fmt == "csv":
        return read_csv_grid(full, grid.shape)
    raise ParseError(f"{path}: unknown format {fmt!r}")


def barenblatt_profile(x: np.ndarray, t: float, C: float = 1.0) -> np.ndarray:
    """Source-type solution of ``u_t = (u u_x)_x`` in 1D."""
    return t ** (-1.0 / 3.0) * np.maximum(C - x * x / (6.0 * t ** (2.0 / 3.0)), 0.0)


def _topography(cfg: ScenarioConfig, grid: Grid) -> np.ndarray:
    t = cfg.topography
    X = grid.centers()
    if t.preset == "flat":
        return np.zeros(grid.shape)
    if t.preset == "slope":
        x = (X[0] - grid.origin[0]) / grid.extent[0]
        return t.amplitude * (1.0 - x)
    if t.preset == "bump":
        r2 = sum(((xi - o - 0.5 * e) / e) ** 2 for xi, o, e in zip(X, grid.origin, grid.extent))
        return t.amplitude * np.exp(-r2 / 0.02)
    return _read_field(cfg, t.file, t.format, grid)


def _initial(cfg: ScenarioConfig, grid: Grid, z: np.ndarray) -> np.ndarray:
    ini = cfg.initial
    X = grid.centers()
    if ini.preset == "dam_break":
        x = (X[0] - grid.origin[0]) / grid.extent[0]
        return np.where(x < ini.position, ini.level, 0.0)
    if ini.preset == "lake_at_rest":
        return np.maximum(ini.level - z, 0.0)
    if ini.preset == "bump":
        r2 = sum((xi - o - 0.5 * e) ** 2 for xi, o, e in zip(X, grid.origin, grid.extent))
        return ini.level * np.maximum(1.0 - r2 / ini.radius**2, 0.0) ** 2
    if ini.preset == "dry":
        return np.zeros(grid.shape)
    if ini.preset == "barenblatt":
        centre = grid.origin[0] + 0.5 * grid.extent[0]
        return barenblatt_profile(X[0] - centre, ini.t0, ini.constant)
    return _read_field(cfg, ini.file, ini.format, grid)


def build_problem(cfg: ScenarioConfig) -> Problem:
    p = cfg.parameters
    params = derive_parameters(p.alpha, p.gamma, p.n, p.sigma)
    grid = _grid(cfg)
    z = _topography(cfg, grid)
    v0 = _initial(cfg, grid, z)
    s = cfg.source
    if s.kind == "zero":
        source = constant_source(grid, 0.0)
    elif s.kind == "constant":
        source = constant_source(grid, s.rate)
    else:
        values = _read_field(cfg, s.file, "csv", grid)
        values.setflags(write=False)
        source = lambda t: values  # noqa: E731
    return Problem(
        params=params,
        grid=grid,
        z=ScalarField(grid, z),
        v0=ScalarField(grid, v0),
        source=source,
        boundary=BoundaryCondition.parse(cfg.boundary),
        eps=cfg.stepping.eps,
        T=cfg.stepping.T,
    )


def build_control(cfg: ScenarioConfig) -> StepControl:
    s = cfg.stepping
    return StepControl(
        cfl=s.cfl,
        dt_min=s.dt_min,
        dt_max=s.dt_max,
        scheme=Scheme.parse(s.scheme),
        max_newton_iters=s.max_newton_iters,
        newton_tol=s.newton_tol,
        store_every=s.store_every,
    )


PRESETS = {
    "dam_break": {
        "name": "dam_break",
        "boundary": "ZeroFlux",
        "parameters": {"alpha": 5.0 / 3.0, "gamma": 0.5, "n": 2},
        "grid": {"cells": [32, 32], "extent": [1.0, 1.0]},
        "topography": {"preset": "slope", "amplitude": 0.1},
        "initial": {"preset": "dam_break", "level": 1.0, "position": 0.5},
        "source": {"kind": "zero"},
        "stepping": {"scheme": "SemiImplicit", "eps": 1e-8, "T": 1.0, "dt_max": 0.01},
    },
    "lake_at_rest": {
        "name": "lake_at_rest",
        "boundary": "ZeroFlux",
        "parameters": {"alpha": 5.0 / 3.0, "gamma": 0.5, "n": 2},
        "grid": {"cells": [32, 32], "extent": [1.0, 1.0]},
        "topography": {"preset": "bump", "amplitude": 0.4},
        "initial": {"preset": "lake_at_rest", "level": 1.0},
        "source": {"kind": "zero"},
        "stepping": {"scheme": "Explicit", "eps": 0.0, "T": 1.0, "dt_min": 1e-3, "dt_max": 1e-3},
    },
    "bump": {
        "name": "bump",
        "boundary": "ZeroFlux",
        "parameters": {"alpha": 5.0 / 3.0, "gamma": 0.5, "n": 2},
        "grid": {"cells": [32, 32], "extent": [1.0, 1.0]},
        "topography": {"preset": "flat"},
        "initial": {"preset": "bump", "level": 1.0, "radius": 0.25},
        "source": {"kind": "zero"},
        "stepping": {"scheme": "SemiImplicit", "eps": 1e-8, "T": 0.5, "dt_max": 0.01},
    },
    "dry": {
        "name": "dry",
        "boundary": "ZeroFlux",
        "parameters": {"alpha": 5.0 / 3.0, "gamma": 0.5, "n": 2},
        "grid": {"cells": [16, 16], "extent": [1.0, 1.0]},
        "topography": {"preset": "slope", "amplitude": 0.1},
        "initial": {"preset": "dry"},
        "source": {"kind": "zero"},
        "stepping": {"scheme": "Explicit", "eps": 1e-8, "T": 1.0, "dt_max": 0.01},
    },
    "pme_limit": {
        "name": "pme_limit",
        "boundary": "ZeroFlux",
        "parameters": {"alpha": 1.0, "gamma": 0.999, "n": 1},
        "grid": {"cells": [64], "extent": [12.0], "origin": [-6.0]},
        "topography": {"preset": "flat"},
        "initial": {"preset": "barenblatt", "t0": 1.0, "constant": 1.0},
        "source": {"kind": "zero"},
        "stepping": {"scheme": "Explicit", "eps": 1e-8, "T": 1.0, "cfl": 0.4, "dt_max": 1.0},
    },
}


def preset_config(name: str, **overrides) -> ScenarioConfig:
    """A shipped preset, with ``block={key: value}`` overrides merged in."""
    if name not in PRESETS:
        raise ParseError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    data = copy.deepcopy(PRESETS[name])
    for key, value in overrides.items():
        if isinstance(value, dict):
            data.setdefault(key, {}).update(value)
        else:
            data[key] = value
    return config_from_dict(data)
