"""End-to-end pipeline: peak extraction, error metric, Monte-Carlo sweeps.

A sweep varies the misalignment angle of the elliptical array, draws random
source pairs per trial, simulates covariances with the true (rotated)
geometry, and hands every estimator the assumed (unrotated) geometry. Trial
seeds derive from (master seed, angle index, trial index), so results are
reproducible row by row regardless of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import baselines, simulate
from .arrays import build_forward_operator, lift_covariance
from .config import Config, build_scenario
from .errors import ConvergenceError
from .fusion import FusionProblem, fuse
from .spatial import Grid, cost_matrix, make_grid

KNOWN_METHODS = ("fusion", "music", "mvdr")


@dataclass
class TrialResult:
    """Outcome of one (method, angle, trial) cell of a sweep."""

    method: str
    angle_deg: float
    trial: int
    sources: np.ndarray       # (k, 2)
    estimates: np.ndarray     # (k, 2); NaN when the solver failed
    mean_error: float
    outer_iterations: int
    converged: bool
    epsilon: float
    gamma: float
    grid_resolution: tuple[int, int]
    seed: int


def extract_peaks(values, grid: Grid, k: int) -> np.ndarray:
    """Positions of the k strongest strict local maxima of a spectrum.

    Local maxima beat all existing 8-neighbors strictly; if fewer than k
    exist, the largest remaining cells fill in. Ties break toward the
    lowest grid index.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n,):
        raise ValueError(f"spectrum has shape {values.shape}, expected ({grid.n},)")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > grid.n:
        raise ValueError(f"k={k} exceeds the {grid.n} grid cells")
    nx, ny = grid.resolution
    field = values.reshape(nx, ny)
    padded = np.full((nx + 2, ny + 2), -np.inf)
    padded[1:-1, 1:-1] = field
    is_max = np.ones((nx, ny), dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            neighbor = padded[1 + dx:nx + 1 + dx, 1 + dy:ny + 1 + dy]
            is_max &= field > neighbor
    flat_max = is_max.ravel()
    order = np.lexsort((np.arange(grid.n), -values))
    ranked_maxima = [idx for idx in order if flat_max[idx]]
    chosen = ranked_maxima[:k]
    if len(chosen) < k:
        taken = set(chosen)
        fill = [idx for idx in order if idx not in taken]
        chosen += fill[: k - len(chosen)]
    return grid.points[np.array(chosen, dtype=int)]


def localization_error(estimates, truth) -> float:
    """Mean distance under the cheapest estimate-to-source matching."""
    est = np.asarray(estimates, dtype=float).reshape(-1, 2)
    tru = np.asarray(truth, dtype=float).reshape(-1, 2)
    if est.shape[0] != tru.shape[0]:
        raise ValueError(
            f"estimate count {est.shape[0]} != source count {tru.shape[0]}"
        )
    dist = np.linalg.norm(est[:, None, :] - tru[None, :, :], axis=-1)
    rows, cols = linear_sum_assignment(dist)
    return float(dist[rows, cols].mean())


def _estimate(method, covariances, scenario, grid, ground_cost, config: Config):
    """Run one estimator; returns (spectrum values, outer_iters, converged)."""
    assumed = scenario.assumed_arrays
    if method == "fusion":
        operators = [build_forward_operator(g, grid) for g in assumed]
        observations = [lift_covariance(r) for r in covariances]
        problem = FusionProblem(operators, observations, ground_cost,
                                config.solver.epsilon, config.solver.gamma)
        result = fuse(
            problem,
            outer_tol=config.solver.outer_tol,
            max_outer=config.solver.max_outer,
            newton_tol=config.solver.newton_tol,
            max_newton=config.solver.max_newton,
        )
        return result.barycenter, result.report.outer_iterations, result.report.converged
    if method == "music":
        spec = baselines.noncoherent_music(covariances, assumed, grid,
                                           config.methods.n_sources)
        return spec.values, 0, True
    if method == "mvdr":
        spec = baselines.noncoherent_mvdr(covariances, assumed, grid,
                                          config.methods.mvdr_diagonal_load)
        return spec.values, 0, True
    raise ValueError(f"unknown method '{method}' (known: {KNOWN_METHODS})")


def run_trial(config: Config, angle_index: int, trial_index: int) -> list[TrialResult]:
    """All enabled methods on one simulated draw of sources and data."""
    sweep = config.sweep
    angle = float(sweep.angles_deg[angle_index])
    seed_seq = np.random.SeedSequence([sweep.seed, angle_index, trial_index])
    rng = np.random.default_rng(seed_seq)
    (x0, x1), (y0, y1) = sweep.source_bounds
    n_src = len(config.scenario.powers)
    sources = np.column_stack([
        rng.uniform(x0, x1, size=n_src),
        rng.uniform(y0, y1, size=n_src),
    ])
    scenario_seed = int(rng.integers(2 ** 62))
    scenario = build_scenario(config.scenario, sources=sources,
                              seed=scenario_seed, misalignment_deg=angle)
    if sweep.exact_covariance:
        covariances = simulate.exact_covariances(scenario)
    else:
        covariances = [simulate.sample_covariance(x)
                       for x in simulate.generate_snapshots(scenario)]
    grid = make_grid(config.grid.bounds, config.grid.resolution)
    ground_cost = cost_matrix(grid)

    results = []
    for method in sweep.methods:
        try:
            values, outer, converged = _estimate(
                method, covariances, scenario, grid, ground_cost, config)
            estimates = extract_peaks(values, grid, n_src)
            error = localization_error(estimates, sources)
        except ConvergenceError:
            estimates = np.full((n_src, 2), np.nan)
            error = float("nan")
            outer, converged = 0, False
        results.append(TrialResult(
            method=method, angle_deg=angle, trial=trial_index,
            sources=sources, estimates=estimates, mean_error=error,
            outer_iterations=outer, converged=converged,
            epsilon=config.solver.epsilon, gamma=config.solver.gamma,
            grid_resolution=tuple(config.grid.resolution), seed=sweep.seed,
        ))
    return results


def mc_sweep(config: Config) -> list[TrialResult]:
    """Run the full angle-by-trial grid of the configured sweep.

    Rows come back sorted by (angle index, trial, method order); the count
    is len(angles) * trials * len(methods). Per-trial solver failures are
    recorded in their rows rather than aborting the sweep.
    """
    for method in config.sweep.methods:
        if method not in KNOWN_METHODS:
            raise ValueError(f"unknown method '{method}' (known: {KNOWN_METHODS})")
    results: list[TrialResult] = []
    for angle_index in range(len(config.sweep.angles_deg)):
        for trial_index in range(config.sweep.trials):
            results.extend(run_trial(config, angle_index, trial_index))
    return results
