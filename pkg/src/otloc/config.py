"""Experiment configuration: defaults, YAML loading, CLI overrides."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import yaml

from . import simulate
from .simulate import Scenario


@dataclass
class GridConfig:
    bounds: tuple = ((-0.6, 0.6), (-0.6, 0.6))
    resolution: tuple = (40, 40)


@dataclass
class SolverConfig:
    epsilon: float = 0.005
    gamma: float = 0.01
    outer_tol: float = 1e-7
    newton_tol: float = 1e-9
    max_outer: int = 5000
    max_newton: int = 50


@dataclass
class ScenarioConfig:
    ula_sensors: int = simulate.DEFAULT_ULA_SENSORS
    ula_spacing: float = simulate.DEFAULT_ULA_SPACING
    ula_center: tuple = simulate.DEFAULT_ULA_CENTER
    ellipse_sensors: int = simulate.DEFAULT_ELLIPSE_SENSORS
    ellipse_center: tuple = simulate.DEFAULT_ELLIPSE_CENTER
    ellipse_aspect: float = simulate.DEFAULT_ELLIPSE_ASPECT
    wavelength_factor: float = simulate.DEFAULT_WAVELENGTH_FACTOR
    sources: tuple = simulate.DEFAULT_SOURCES
    powers: tuple = (100.0, 100.0)
    noise_var: float = 1.0
    snapshots: int = 500

    @property
    def wavelength(self) -> float:
        return self.wavelength_factor * self.ula_spacing


@dataclass
class SweepConfig:
    angles_deg: tuple = (0.0, 5.0, 10.0)
    trials: int = 20
    methods: tuple = ("fusion", "music")
    seed: int = 1234
    source_bounds: tuple = ((-0.5, 0.5), (-0.5, 0.5))
    exact_covariance: bool = False


@dataclass
class MethodConfig:
    n_sources: int = 2
    mvdr_diagonal_load: float = 0.01


@dataclass
class Config:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    methods: MethodConfig = field(default_factory=MethodConfig)


_SECTIONS = {
    "scenario": ScenarioConfig,
    "grid": GridConfig,
    "solver": SolverConfig,
    "sweep": SweepConfig,
    "methods": MethodConfig,
}


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(item) for item in value)
    return value


def config_from_dict(data: dict) -> Config:
    """Build a Config from nested dictionaries, validating keys."""
    if not isinstance(data, dict):
        raise ValueError("config root must be a mapping of sections")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ValueError(f"config section '{name}' must be a mapping")
        allowed = set(cls.__dataclass_fields__)
        bad = set(section) - allowed
        if bad:
            raise ValueError(f"unknown keys in config section '{name}': {sorted(bad)}")
        kwargs[name] = cls(**{key: _tupled(val) for key, val in section.items()})
    return Config(**kwargs)


def load_config(path) -> Config:
    """Load a YAML config file; missing keys fall back to defaults."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise ValueError(f"cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ValueError(f"cannot parse config file {path}: {exc}") from exc
    return config_from_dict(data or {})


def build_scenario(cfg: ScenarioConfig, sources=None, seed: int = 0,
                   misalignment_deg: float = 0.0, snapshots=None) -> Scenario:
    """Instantiate the Scenario a ScenarioConfig describes."""
    wavelength = cfg.wavelength
    ellipse = simulate.ellipse_array(
        cfg.ellipse_sensors, wavelength,
        center=cfg.ellipse_center, aspect=cfg.ellipse_aspect,
    )
    ula = simulate.linear_array(
        cfg.ula_sensors, cfg.ula_spacing,
        center=cfg.ula_center, wavelength=wavelength,
    )
    true_ellipse = ellipse
    if misalignment_deg != 0.0:
        centroid = ellipse.sensors.mean(axis=0)
        true_ellipse = simulate.rotate_array(ellipse, misalignment_deg, centroid)
    return Scenario(
        arrays=(true_ellipse, ula),
        assumed_arrays=(ellipse, ula),
        sources=cfg.sources if sources is None else sources,
        powers=cfg.powers,
        noise_var=cfg.noise_var,
        snapshots=cfg.snapshots if snapshots is None else snapshots,
        seed=seed,
    )


def parse_resolution(text: str) -> tuple[int, int]:
    """Parse a grid resolution flag: '40' means 40x40, '40x30' is explicit."""
    parts = str(text).lower().split("x")
    try:
        if len(parts) == 1:
            nx = ny = int(parts[0])
        elif len(parts) == 2:
            nx, ny = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise ValueError(f"cannot parse grid resolution '{text}'") from None
    return nx, ny


def apply_overrides(config: Config, *, epsilon=None, gamma=None, grid_res=None,
                    angles=None, trials=None, methods=None, seed=None) -> Config:
    """Return a copy of the config with CLI-level overrides applied."""
    solver = config.solver
    if epsilon is not None:
        solver = replace(solver, epsilon=float(epsilon))
    if gamma is not None:
        solver = replace(solver, gamma=float(gamma))
    grid = config.grid
    if grid_res is not None:
        grid = replace(grid, resolution=parse_resolution(grid_res))
    sweep = config.sweep
    if angles is not None:
        sweep = replace(sweep, angles_deg=tuple(float(a) for a in str(angles).split(",")))
    if trials is not None:
        sweep = replace(sweep, trials=int(trials))
    if methods is not None:
        sweep = replace(sweep, methods=tuple(str(methods).split(",")))
    if seed is not None:
        sweep = replace(sweep, seed=int(seed))
    return Config(scenario=config.scenario, grid=grid, solver=solver,
                  sweep=sweep, methods=config.methods)
