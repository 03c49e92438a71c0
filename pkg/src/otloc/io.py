"""File formats: CSV emitters and readers, snapshot dumps, PNG rendering.

Floats are written with ``repr`` (shortest round-trip form) so identical
inputs always produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import struct

import numpy as np
from PIL import Image

from .arrays import ArrayGeometry
from .spatial import Grid


def write_grid_csv(grid: Grid, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["index", "x", "y"])
        for idx, (x, y) in enumerate(grid.points):
            writer.writerow([idx, repr(float(x)), repr(float(y))])


def write_geometry_csv(geometry: ArrayGeometry, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["sensor_index", "x", "y"])
        for idx, (x, y) in enumerate(geometry.sensors):
            writer.writerow([idx, repr(float(x)), repr(float(y))])


def read_geometry_csv(path, wavelength: float, label: str = "") -> ArrayGeometry:
    sensors = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            sensors.append((float(row["x"]), float(row["y"])))
    if not sensors:
        raise ValueError(f"geometry file {path} holds no sensors")
    return ArrayGeometry(np.array(sensors), wavelength, label)


def write_covariance_csv(cov, path) -> None:
    cov = np.asarray(cov)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["row", "col", "re", "im"])
        for i in range(cov.shape[0]):
            for j in range(cov.shape[1]):
                writer.writerow([i, j, repr(float(cov[i, j].real)),
                                 repr(float(cov[i, j].imag))])


def read_covariance_csv(path) -> np.ndarray:
    entries = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            entries.append((int(row["row"]), int(row["col"]),
                            float(row["re"]), float(row["im"])))
    if not entries:
        raise ValueError(f"covariance file {path} is empty")
    size = max(max(i, j) for i, j, _, _ in entries) + 1
    cov = np.zeros((size, size), dtype=complex)
    for i, j, re, im in entries:
        cov[i, j] = re + 1j * im
    return cov


def write_spectrum_csv(values, grid: Grid, path) -> None:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n,):
        raise ValueError(f"spectrum has shape {values.shape}, expected ({grid.n},)")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["index", "x", "y", "mass"])
        for idx, ((x, y), mass) in enumerate(zip(grid.points, values)):
            writer.writerow([idx, repr(float(x)), repr(float(y)), repr(float(mass))])


def read_spectrum_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (values, points) in file order."""
    values, points = [], []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            points.append((float(row["x"]), float(row["y"])))
            values.append(float(row["mass"]))
    if not values:
        raise ValueError(f"spectrum file {path} is empty")
    return np.array(values), np.array(points)


def write_convergence_csv(report, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["iteration", "dual_value", "max_residual"])
        for idx, (dual, res) in enumerate(
            zip(report.dual_values, report.max_residuals), start=1
        ):
            writer.writerow([idx, repr(float(dual)), repr(float(res))])


RESULT_COLUMNS = [
    "method", "angle_deg", "trial",
    "src1_x", "src1_y", "src2_x", "src2_y",
    "est1_x", "est1_y", "est2_x", "est2_y",
    "mean_error", "outer_iters", "converged",
    "epsilon", "gamma", "grid_res", "seed",
]


def write_results_csv(trials, path) -> None:
    """One row per trial result, schema RESULT_COLUMNS.

    The source/estimate columns hold two positions; trials with a
    different source count are rejected to keep the schema fixed.
    """
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(RESULT_COLUMNS)
        for res in trials:
            if res.sources.shape[0] != 2 or res.estimates.shape[0] != 2:
                raise ValueError("results CSV expects exactly two sources per trial")
            row = [res.method, repr(float(res.angle_deg)), res.trial]
            row += [repr(float(c)) for c in res.sources.ravel()]
            row += [repr(float(c)) for c in res.estimates.ravel()]
            row += [repr(float(res.mean_error)), res.outer_iterations,
                    int(res.converged), repr(float(res.epsilon)),
                    repr(float(res.gamma)),
                    f"{res.grid_resolution[0]}x{res.grid_resolution[1]}",
                    res.seed]
            writer.writerow(row)


def save_snapshots(snapshots, label: str, path) -> None:
    """Binary dump: 8-byte little-endian header length, JSON header, then
    interleaved (re, im) float64 little-endian samples in row-major order."""
    data = np.asarray(snapshots)
    header = json.dumps({"p": int(data.shape[0]), "N": int(data.shape[1]),
                         "label": label}).encode("utf-8")
    interleaved = np.empty((data.shape[0], data.shape[1], 2), dtype="<f8")
    interleaved[:, :, 0] = data.real
    interleaved[:, :, 1] = data.imag
    with open(path, "wb") as handle:
        handle.write(struct.pack("<Q", len(header)))
        handle.write(header)
        handle.write(interleaved.tobytes())


def load_snapshots(path) -> tuple[np.ndarray, str]:
    with open(path, "rb") as handle:
        (header_len,) = struct.unpack("<Q", handle.read(8))
        header = json.loads(handle.read(header_len).decode("utf-8"))
        raw = np.frombuffer(handle.read(), dtype="<f8")
    p, n_snap = header["p"], header["N"]
    interleaved = raw.reshape(p, n_snap, 2)
    return interleaved[:, :, 0] + 1j * interleaved[:, :, 1], header["label"]


def render_spectrum_png(values, grid: Grid, path) -> None:
    """Grayscale heatmap, linearly normalized per image; x right, y up."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n,):
        raise ValueError(f"spectrum has shape {values.shape}, expected ({grid.n},)")
    nx, ny = grid.resolution
    field = values.reshape(nx, ny)
    image = field.T[::-1, :]                      # rows top-down = y descending
    lo, hi = float(image.min()), float(image.max())
    if hi > lo:
        scaled = (image - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(image)
    Image.fromarray(np.round(scaled * 255).astype(np.uint8), mode="L").save(path)
