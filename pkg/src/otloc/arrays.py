"""Near-field array response model and real-valued covariance lifting.

An array of p sensors observing point sources that emit spherical waves has
covariance R = sum_k phi_k a(x_k) a(x_k)^H for a mass spectrum phi on the
grid, where a(x) is the array response to a unit source at x. The solver
works over the reals, so complex p x p covariances are flattened
column-major and split into stacked real and imaginary parts ("lifting");
the linear map from spectra to lifted covariances is materialized as a
(2 p^2) x n matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spatial import Grid


@dataclass(frozen=True)
class ArrayGeometry:
    """Planar sensor array: positions in meters plus operating wavelength."""

    sensors: np.ndarray   # (p, 2)
    wavelength: float
    label: str = ""

    def __post_init__(self):
        sensors = np.array(self.sensors, dtype=float)
        if sensors.ndim != 2 or sensors.shape[1] != 2:
            raise ValueError("sensors must have shape (p, 2)")
        if sensors.shape[0] < 1:
            raise ValueError("array needs at least one sensor")
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        diff = sensors[:, None, :] - sensors[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        np.fill_diagonal(dist2, np.inf)
        if np.any(dist2 == 0.0):
            i, j = np.unravel_index(int(np.argmin(dist2)), dist2.shape)
            raise ValueError(f"sensors {i} and {j} of array '{self.label}' coincide")
        sensors.flags.writeable = False
        object.__setattr__(self, "sensors", sensors)

    @property
    def p(self) -> int:
        return self.sensors.shape[0]


@dataclass(frozen=True)
class ForwardOperator:
    """Real-lifted linear map from grid spectra to vectorized covariances.

    Column k is the lift of a(x_k) a(x_k)^H, so ``matrix @ phi`` equals the
    lifted covariance induced by the spectrum phi.
    """

    matrix: np.ndarray    # (2 p^2, n)
    geometry_label: str = ""
    grid_label: str = ""

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2:
            raise ValueError("operator matrix must be 2-D")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]


def steering_vector(geometry: ArrayGeometry, x) -> np.ndarray:
    """Array response to a unit point source at position ``x``.

    Entry k is ``d_k**-0.5 * exp(-2j*pi*d_k / wavelength)`` with d_k the
    distance from sensor k to the source: cylindrical-wave amplitude decay
    times the propagation phase. Undefined when the source sits exactly on
    a sensor.
    """
    x = np.asarray(x, dtype=float).reshape(2)
    diff = geometry.sensors - x
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if np.any(dist == 0.0):
        k = int(np.argmin(dist))
        raise ValueError(f"source at {tuple(x)} coincides with sensor {k}")
    return np.exp((-2j * np.pi / geometry.wavelength) * dist) / np.sqrt(dist)


def steering_matrix(geometry: ArrayGeometry, points) -> np.ndarray:
    """Steering vectors for many positions stacked as columns, shape (p, n)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    diff = geometry.sensors[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if np.any(dist == 0.0):
        k, j = np.unravel_index(int(np.argmin(dist)), dist.shape)
        raise ValueError(
            f"sensor {k} of array '{geometry.label}' coincides with point {j}"
        )
    return np.exp((-2j * np.pi / geometry.wavelength) * dist) / np.sqrt(dist)


def gamma_apply(geometry: ArrayGeometry, grid: Grid, spectrum) -> np.ndarray:
    """Covariance matrix induced by a mass spectrum on the grid.

    Computes sum_k phi_k a(x_k) a(x_k)^H, which is Hermitian positive
    semi-definite for any nonnegative spectrum and linear in the spectrum.
    """
    phi = np.asarray(spectrum, dtype=float)
    if phi.shape != (grid.n,):
        raise ValueError(f"spectrum has shape {phi.shape}, expected ({grid.n},)")
    if np.any(phi < 0):
        raise ValueError("spectrum entries must be nonnegative")
    steer = steering_matrix(geometry, grid.points)
    cov = (steer * phi) @ steer.conj().T
    return 0.5 * (cov + cov.conj().T)


def lift_covariance(cov) -> np.ndarray:
    """Flatten a complex covariance into stacked real/imaginary parts.

    The matrix is vectorized column-major; the first p^2 output entries are
    the real parts, the last p^2 the imaginary parts.
    """
    cov = np.asarray(cov)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"covariance must be square, got shape {cov.shape}")
    vec = cov.flatten(order="F")
    return np.concatenate([vec.real, vec.imag])


def unlift_covariance(vec) -> np.ndarray:
    """Inverse of :func:`lift_covariance`: rebuild the complex matrix."""
    vec = np.asarray(vec, dtype=float)
    if vec.ndim != 1 or vec.size % 2 != 0:
        raise ValueError("lifted covariance must be a 1-D vector of even length")
    half = vec.size // 2
    p = int(round(np.sqrt(half)))
    if p * p != half:
        raise ValueError(f"length {vec.size} is not 2*p^2 for integer p")
    real = vec[:half].reshape(p, p, order="F")
    imag = vec[half:].reshape(p, p, order="F")
    return real + 1j * imag


def build_forward_operator(geometry: ArrayGeometry, grid: Grid) -> ForwardOperator:
    """Materialize the spectrum-to-lifted-covariance map for one array.

    Raises if any sensor sits exactly on a grid point, where the response
    amplitude is singular.
    """
    steer = steering_matrix(geometry, grid.points)
    p, n = steer.shape
    outer = steer[:, None, :] * steer.conj()[None, :, :]       # [row, col, k]
    vec = outer.transpose(1, 0, 2).reshape(p * p, n)           # column-major vec per k
    matrix = np.concatenate([vec.real, vec.imag], axis=0)
    return ForwardOperator(matrix, geometry.label, grid.label)
