import numpy as np
import pytest
from PIL import Image

from otloc import io
from otloc.simulate import default_scenario, generate_snapshots
from otloc.spatial import make_grid

GRID = make_grid(((-0.5, 0.5), (-0.5, 0.5)), (4, 3))


def test_grid_csv_layout(tmp_path):
    path = tmp_path / "grid.csv"
    io.write_grid_csv(GRID, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "index,x,y"
    assert len(lines) == GRID.n + 1


def test_geometry_roundtrip(tmp_path):
    geometry = default_scenario().arrays[0]
    path = tmp_path / "geom.csv"
    io.write_geometry_csv(geometry, path)
    loaded = io.read_geometry_csv(path, geometry.wavelength, geometry.label)
    np.testing.assert_array_equal(loaded.sensors, geometry.sensors)
    assert loaded.wavelength == geometry.wavelength


def test_covariance_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    raw = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    cov = raw @ raw.conj().T
    path = tmp_path / "cov.csv"
    io.write_covariance_csv(cov, path)
    np.testing.assert_array_equal(io.read_covariance_csv(path), cov)


def test_spectrum_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    values = rng.uniform(0, 5, GRID.n)
    path = tmp_path / "spec.csv"
    io.write_spectrum_csv(values, GRID, path)
    loaded, points = io.read_spectrum_csv(path)
    np.testing.assert_array_equal(loaded, values)
    np.testing.assert_array_equal(points, GRID.points)


def test_snapshot_roundtrip(tmp_path):
    scenario = default_scenario(snapshots=12, seed=3)
    data = generate_snapshots(scenario)[0]
    path = tmp_path / "snaps.bin"
    io.save_snapshots(data, "ellipse", path)
    loaded, label = io.load_snapshots(path)
    np.testing.assert_array_equal(loaded, data)
    assert label == "ellipse"


def test_render_all_zero_is_black(tmp_path):
    path = tmp_path / "zero.png"
    io.render_spectrum_png(np.zeros(GRID.n), GRID, path)
    image = np.asarray(Image.open(path))
    assert image.shape == (GRID.resolution[1], GRID.resolution[0])
    assert np.all(image == 0)


def test_render_orientation(tmp_path):
    # mass in the top-right cell must land in the image's top-right pixel
    values = np.zeros(GRID.n)
    values[-1] = 1.0        # largest x, largest y
    path = tmp_path / "corner.png"
    io.render_spectrum_png(values, GRID, path)
    image = np.asarray(Image.open(path))
    assert image[0, -1] == 255
    assert image.sum() == 255


def test_results_csv_deterministic_bytes(tmp_path):
    from otloc.harness import TrialResult

    rows = [TrialResult(method="music", angle_deg=5.0, trial=1,
                        sources=np.array([[0.1, 0.2], [0.3, 0.4]]),
                        estimates=np.array([[0.1, 0.2], [0.35, 0.45]]),
                        mean_error=0.0353, outer_iterations=0, converged=True,
                        epsilon=0.005, gamma=0.01, grid_resolution=(40, 40),
                        seed=7)]
    path_a, path_b = tmp_path / "a.csv", tmp_path / "b.csv"
    io.write_results_csv(rows, path_a)
    io.write_results_csv(rows, path_b)
    assert path_a.read_bytes() == path_b.read_bytes()
    header = path_a.read_text().splitlines()[0]
    assert header == ",".join(io.RESULT_COLUMNS)
