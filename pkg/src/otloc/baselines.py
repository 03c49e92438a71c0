"""Non-coherent reference estimators: fused MUSIC and MVDR spectra.

Both estimators work per array on its own covariance and combine arrays by
summing the per-array scores over the grid, which keeps them usable when
no cross-array correlation exists. Steering vectors are normalized to unit
norm before use; otherwise the near-field amplitude decay biases the
scores toward locations close to an array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .arrays import ArrayGeometry, steering_matrix
from .spatial import Grid

DENOMINATOR_FLOOR = 1e-12
HERMITIAN_RTOL = 1e-8


@dataclass(frozen=True)
class PseudoSpectrum:
    """Location scores over the grid; peaks mark sources, values are not power."""

    values: np.ndarray
    method: str

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("pseudo-spectrum values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def _checked_hermitian(cov, index):
    cov = np.asarray(cov)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"covariance {index} must be square")
    scale = np.max(np.abs(cov)) or 1.0
    if np.max(np.abs(cov - cov.conj().T)) > HERMITIAN_RTOL * scale:
        raise ValueError(f"covariance {index} is not Hermitian")
    return 0.5 * (cov + cov.conj().T)


def _unit_steering(geometry, grid):
    steer = steering_matrix(geometry, grid.points)
    return steer / np.linalg.norm(steer, axis=0)


def noncoherent_music(covariances, assumed_geometries, grid: Grid,
                      n_sources: int) -> PseudoSpectrum:
    """MUSIC score fused across arrays.

    Per array the noise subspace is spanned by the p_j - n_sources smallest
    eigenvectors of R_j; the fused score is the reciprocal of the summed
    squared projections of the unit steering vectors onto those subspaces,
    floored to keep values finite.
    """
    if len(covariances) != len(assumed_geometries):
        raise ValueError("need one covariance per geometry")
    if n_sources < 1:
        raise ValueError("n_sources must be at least 1")
    denominator = np.zeros(grid.n)
    for j, (cov, geometry) in enumerate(zip(covariances, assumed_geometries)):
        cov = _checked_hermitian(cov, j)
        p = cov.shape[0]
        if n_sources >= p:
            raise ValueError(
                f"n_sources={n_sources} must be below the {p} sensors of array {j}"
            )
        _, vectors = np.linalg.eigh(cov)
        noise_basis = vectors[:, : p - n_sources]
        steer = _unit_steering(geometry, grid)
        projection = noise_basis.conj().T @ steer
        denominator += np.sum(np.abs(projection) ** 2, axis=0)
    values = 1.0 / np.maximum(denominator, DENOMINATOR_FLOOR)
    return PseudoSpectrum(values, "music")


def noncoherent_mvdr(covariances, assumed_geometries, grid: Grid,
                     diagonal_load: float = 0.0) -> PseudoSpectrum:
    """MVDR output power fused across arrays.

    Per array: 1 / (a^H (R + load*I)^{-1} a) with unit steering vectors a,
    summed over arrays. The loaded covariance must be positive definite.
    """
    if len(covariances) != len(assumed_geometries):
        raise ValueError("need one covariance per geometry")
    if diagonal_load < 0:
        raise ValueError("diagonal load must be nonnegative")
    power = np.zeros(grid.n)
    for j, (cov, geometry) in enumerate(zip(covariances, assumed_geometries)):
        cov = _checked_hermitian(cov, j)
        loaded = cov + diagonal_load * np.eye(cov.shape[0])
        steer = _unit_steering(geometry, grid)
        try:
            solved = cho_solve(cho_factor(loaded), steer)
        except LinAlgError as exc:
            raise ValueError(
                f"loaded covariance of array {j} is singular; "
                "increase diagonal_load"
            ) from exc
        quad = np.real(np.sum(steer.conj() * solved, axis=0))
        power += 1.0 / np.maximum(quad, DENOMINATOR_FLOOR)
    return PseudoSpectrum(power, "mvdr")
