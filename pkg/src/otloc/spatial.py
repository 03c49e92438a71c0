"""Discretization of the 2-D search region and transport ground costs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Bounds = tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class Grid:
    """Uniform lattice of cell centers covering a rectangle.

    Points are ordered with the x axis slowest: the cell with x-index i and
    y-index j sits at flat index ``i * ny + j``. Each entry of a spectrum
    defined on the grid is the mass contained in that cell (cell area is
    absorbed into the mass values).
    """

    points: np.ndarray            # (n, 2), meters
    bounds: Bounds                # ((xmin, xmax), (ymin, ymax))
    resolution: tuple[int, int]   # cells per axis (nx, ny)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def cell_size(self) -> tuple[float, float]:
        (x0, x1), (y0, y1) = self.bounds
        nx, ny = self.resolution
        return (x1 - x0) / nx, (y1 - y0) / ny

    @property
    def label(self) -> str:
        return f"{self.resolution[0]}x{self.resolution[1]}"


def make_grid(bounds: Bounds, resolution: tuple[int, int]) -> Grid:
    """Build the uniform cell-center grid over an axis-aligned rectangle.

    Parameters
    ----------
    bounds : ((xmin, xmax), (ymin, ymax))
        Search rectangle in meters.
    resolution : (nx, ny)
        Number of cells per axis; the grid has ``nx * ny`` points.
    """
    (x0, x1), (y0, y1) = ((float(a), float(b)) for a, b in bounds)
    nx, ny = int(resolution[0]), int(resolution[1])
    if nx < 1 or ny < 1:
        raise ValueError(f"resolution must be at least 1 per axis, got {(nx, ny)}")
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"bounds must be non-degenerate with min < max, got {bounds}")
    xs = x0 + ((np.arange(nx) + 0.5) / nx) * (x1 - x0)
    ys = y0 + ((np.arange(ny) + 0.5) / ny) * (y1 - y0)
    points = np.column_stack([np.repeat(xs, ny), np.tile(ys, nx)])
    return Grid(points=points, bounds=((x0, x1), (y0, y1)), resolution=(nx, ny))


def cost_matrix(grid: Grid) -> np.ndarray:
    """Pairwise squared Euclidean distances between grid points (meters^2).

    Symmetric with a zero diagonal; entry (k, l) is the cost of moving one
    unit of mass from cell k to cell l.
    """
    diff = grid.points[:, None, :] - grid.points[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)
