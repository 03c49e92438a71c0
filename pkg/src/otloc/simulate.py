"""Synthetic scenarios: array layouts, snapshots, sample covariances.

The stock scenario places an 8-sensor elliptical array and a 7-sensor
uniform linear array on opposite sides of the unit search square, with the
wavelength set to twice the smallest linear-array spacing. Misalignment is
modeled as a rigid rotation of the elliptical array that only the data
generation sees; estimators keep working with the unrotated geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry, steering_matrix

DEFAULT_ULA_SENSORS = 7
DEFAULT_ULA_SPACING = 0.3
DEFAULT_ULA_CENTER = (1.2, 0.0)
DEFAULT_ELLIPSE_SENSORS = 8
DEFAULT_ELLIPSE_CENTER = (-1.2, 0.0)
DEFAULT_ELLIPSE_ASPECT = 0.6
DEFAULT_WAVELENGTH_FACTOR = 2.0
DEFAULT_SOURCES = ((-0.25, -0.2), (0.3, 0.25))


@dataclass(frozen=True)
class Scenario:
    """A complete simulation setup.

    ``arrays`` generate the data; ``assumed_arrays`` are what estimators
    believe the geometry to be. They differ exactly by the misalignment.
    """

    arrays: tuple[ArrayGeometry, ...]
    assumed_arrays: tuple[ArrayGeometry, ...]
    sources: np.ndarray      # (k, 2)
    powers: np.ndarray       # (k,)
    noise_var: float
    snapshots: int
    seed: int

    def __post_init__(self):
        sources = np.array(self.sources, dtype=float).reshape(-1, 2)
        powers = np.atleast_1d(np.array(self.powers, dtype=float))
        if sources.shape[0] != powers.shape[0]:
            raise ValueError("need one power per source")
        if np.any(powers <= 0):
            raise ValueError("source powers must be positive")
        if self.noise_var < 0:
            raise ValueError("noise variance must be nonnegative")
        if self.snapshots < 1:
            raise ValueError("need at least one snapshot")
        if len(self.arrays) != len(self.assumed_arrays):
            raise ValueError("true and assumed array lists must have equal length")
        for true, assumed in zip(self.arrays, self.assumed_arrays):
            if true.p != assumed.p:
                raise ValueError(
                    f"sensor count mismatch between true and assumed '{true.label}'"
                )
        sources.flags.writeable = False
        powers.flags.writeable = False
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "arrays", tuple(self.arrays))
        object.__setattr__(self, "assumed_arrays", tuple(self.assumed_arrays))


def linear_array(n_sensors: int, spacing: float, center=(0.0, 0.0),
                 wavelength: float = 1.0, label: str = "ula") -> ArrayGeometry:
    """Uniform linear array along the y axis, centered at ``center``."""
    offsets = (np.arange(n_sensors) - (n_sensors - 1) / 2.0) * spacing
    sensors = np.column_stack([np.full(n_sensors, center[0]), center[1] + offsets])
    return ArrayGeometry(sensors, wavelength, label)


def ellipse_array(n_sensors: int, wavelength: float, center=(0.0, 0.0),
                  aspect: float = DEFAULT_ELLIPSE_ASPECT,
                  label: str = "ellipse") -> ArrayGeometry:
    """Sensors equally spaced in angle on an axis-aligned ellipse.

    The semi-major axis is chosen so consecutive sensors sit roughly half a
    wavelength apart along the arc: a = 0.5 * wavelength * n / (2 pi).
    """
    semi_major = 0.5 * wavelength * n_sensors / (2.0 * np.pi)
    semi_minor = aspect * semi_major
    angles = 2.0 * np.pi * np.arange(n_sensors) / n_sensors
    sensors = np.column_stack([
        center[0] + semi_major * np.cos(angles),
        center[1] + semi_minor * np.sin(angles),
    ])
    return ArrayGeometry(sensors, wavelength, label)


def rotate_array(geometry: ArrayGeometry, angle_deg: float, center) -> ArrayGeometry:
    """Rigidly rotate all sensors about ``center``; wavelength is kept."""
    theta = np.deg2rad(angle_deg)
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    center = np.asarray(center, dtype=float).reshape(2)
    sensors = (geometry.sensors - center) @ rot.T + center
    return ArrayGeometry(sensors, geometry.wavelength, geometry.label)


def default_scenario(sources=None, powers=(100.0, 100.0), noise_var: float = 1.0,
                     snapshots: int = 500, seed: int = 0,
                     misalignment_deg: float = 0.0) -> Scenario:
    """The stock two-array scenario: ellipse of 8 plus ULA of 7 sensors.

    The wavelength equals twice the smallest linear-array spacing. With a
    nonzero misalignment the data-generating ellipse is rotated about its
    centroid while the assumed geometry stays put.
    """
    wavelength = DEFAULT_WAVELENGTH_FACTOR * DEFAULT_ULA_SPACING
    ellipse = ellipse_array(DEFAULT_ELLIPSE_SENSORS, wavelength,
                            center=DEFAULT_ELLIPSE_CENTER)
    ula = linear_array(DEFAULT_ULA_SENSORS, DEFAULT_ULA_SPACING,
                       center=DEFAULT_ULA_CENTER, wavelength=wavelength)
    assumed = (ellipse, ula)
    true_ellipse = ellipse
    if misalignment_deg != 0.0:
        centroid = ellipse.sensors.mean(axis=0)
        true_ellipse = rotate_array(ellipse, misalignment_deg, centroid)
    if sources is None:
        sources = DEFAULT_SOURCES
    return Scenario(
        arrays=(true_ellipse, ula),
        assumed_arrays=assumed,
        sources=np.asarray(sources, dtype=float),
        powers=np.asarray(powers, dtype=float),
        noise_var=noise_var,
        snapshots=snapshots,
        seed=seed,
    )


def generate_snapshots(scenario: Scenario) -> list[np.ndarray]:
    """Simulate one batch of complex snapshots per array.

    Sources emit circularly symmetric white Gaussian signals that all
    arrays observe simultaneously; sensor noise is drawn independently per
    array, sensor, and snapshot. The draw order is fixed (sources first,
    then per-array noise in array order), so a seed pins every sample.
    """
    rng = np.random.default_rng(scenario.seed)
    n_src = scenario.sources.shape[0]
    n_snap = scenario.snapshots
    amplitude = np.sqrt(scenario.powers / 2.0)[:, None]
    signals = amplitude * (rng.standard_normal((n_src, n_snap))
                           + 1j * rng.standard_normal((n_src, n_snap)))
    noise_amp = np.sqrt(scenario.noise_var / 2.0)
    out = []
    for geometry in scenario.arrays:
        steer = steering_matrix(geometry, scenario.sources)
        data = steer @ signals
        if scenario.noise_var > 0:
            data = data + noise_amp * (
                rng.standard_normal((geometry.p, n_snap))
                + 1j * rng.standard_normal((geometry.p, n_snap))
            )
        out.append(data)
    return out


def sample_covariance(snapshots) -> np.ndarray:
    """Sample covariance (1/N) X X^H of a p x N snapshot matrix."""
    data = np.asarray(snapshots)
    if data.ndim != 2 or data.shape[1] < 1:
        raise ValueError("snapshots must be a p x N matrix with N >= 1")
    cov = data @ data.conj().T / data.shape[1]
    return 0.5 * (cov + cov.conj().T)


def exact_covariances(scenario: Scenario) -> list[np.ndarray]:
    """Noise-free covariances sum_i P_i a(s_i) a(s_i)^H per (true) array.

    Bypasses snapshot statistics entirely; sensor noise is deliberately
    excluded so algorithmic behavior can be tested in isolation.
    """
    out = []
    for geometry in scenario.arrays:
        steer = steering_matrix(geometry, scenario.sources)
        cov = (steer * scenario.powers) @ steer.conj().T
        out.append(0.5 * (cov + cov.conj().T))
    return out
