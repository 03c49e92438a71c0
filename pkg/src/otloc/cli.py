"""Command line interface.

Subcommands: ``simulate`` writes per-array geometry and covariance files,
``fuse`` / ``music`` / ``mvdr`` estimate a spectrum from such files,
``mc-sweep`` runs the Monte-Carlo misalignment study, and ``render`` turns
a spectrum CSV into a grayscale PNG.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .arrays import build_forward_operator, lift_covariance
from .baselines import noncoherent_music, noncoherent_mvdr
from .config import Config, apply_overrides, build_scenario, load_config
from .errors import ConvergenceError
from .fusion import FusionProblem, fuse
from .harness import extract_peaks, mc_sweep
from .simulate import exact_covariances, generate_snapshots, sample_covariance
from .spatial import cost_matrix, make_grid


def _load(args) -> Config:
    config = load_config(args.config) if args.config else Config()
    return apply_overrides(
        config,
        epsilon=getattr(args, "epsilon", None),
        gamma=getattr(args, "gamma", None),
        grid_res=getattr(args, "grid_res", None),
        angles=getattr(args, "angles", None),
        trials=getattr(args, "trials", None),
        methods=getattr(args, "methods", None),
        seed=getattr(args, "seed", None),
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    config = _load(args)
    out = _out_dir(args)
    seed = config.sweep.seed if args.seed is None else int(args.seed)
    scenario = build_scenario(config.scenario, seed=seed,
                              misalignment_deg=args.angle)
    if args.exact:
        covariances = exact_covariances(scenario)
    else:
        covariances = [sample_covariance(x) for x in generate_snapshots(scenario)]
    labels = []
    for geometry, cov in zip(scenario.assumed_arrays, covariances):
        labels.append(geometry.label)
        io.write_geometry_csv(geometry, out / f"{geometry.label}_geometry.csv")
        io.write_covariance_csv(cov, out / f"{geometry.label}_covariance.csv")
    with open(out / "sources.csv", "w", encoding="utf-8") as handle:
        handle.write("index,x,y\n")
        for idx, (x, y) in enumerate(scenario.sources):
            handle.write(f"{idx},{float(x)!r},{float(y)!r}\n")
    meta = {
        "labels": labels,
        "wavelength": config.scenario.wavelength,
        "angle_deg": args.angle,
        "seed": seed,
        "exact": bool(args.exact),
    }
    with open(out / "meta.json", "w", encoding="utf-8") as handle:
        json.dump(meta, handle, indent=2)
    print(f"wrote {len(labels)} arrays to {out}")
    return 0


def _read_dataset(data_dir: Path):
    meta_path = data_dir / "meta.json"
    try:
        with open(meta_path, encoding="utf-8") as handle:
            meta = json.load(handle)
    except OSError as exc:
        raise ValueError(f"cannot read dataset metadata {meta_path}: {exc}") from exc
    geometries, covariances = [], []
    for label in meta["labels"]:
        geometry = io.read_geometry_csv(
            data_dir / f"{label}_geometry.csv", meta["wavelength"], label)
        cov = io.read_covariance_csv(data_dir / f"{label}_covariance.csv")
        if cov.shape[0] != geometry.p:
            raise ValueError(
                f"covariance size {cov.shape[0]} does not match the "
                f"{geometry.p} sensors of array '{label}'"
            )
        geometries.append(geometry)
        covariances.append(cov)
    return geometries, covariances


def cmd_fuse(args) -> int:
    config = _load(args)
    out = _out_dir(args)
    geometries, covariances = _read_dataset(Path(args.data))
    grid = make_grid(config.grid.bounds, config.grid.resolution)
    operators = [build_forward_operator(g, grid) for g in geometries]
    observations = [lift_covariance(c) for c in covariances]
    problem = FusionProblem(operators, observations, cost_matrix(grid),
                            config.solver.epsilon, config.solver.gamma)
    result = fuse(
        problem,
        outer_tol=config.solver.outer_tol,
        max_outer=config.solver.max_outer,
        newton_tol=config.solver.newton_tol,
        max_newton=config.solver.max_newton,
    )
    io.write_spectrum_csv(result.barycenter, grid, out / "spectrum_fusion.csv")
    io.write_convergence_csv(result.report, out / "convergence_fusion.csv")
    peaks = extract_peaks(result.barycenter, grid, config.methods.n_sources)
    status = "converged" if result.report.converged else "not converged"
    print(f"fusion {status} after {result.report.outer_iterations} sweeps; "
          f"peaks at {[tuple(round(c, 4) for c in p) for p in peaks]}")
    return 0


def _run_baseline(args, name, runner) -> int:
    config = _load(args)
    out = _out_dir(args)
    geometries, covariances = _read_dataset(Path(args.data))
    grid = make_grid(config.grid.bounds, config.grid.resolution)
    spectrum = runner(config, covariances, geometries, grid)
    io.write_spectrum_csv(spectrum.values, grid, out / f"spectrum_{name}.csv")
    peaks = extract_peaks(spectrum.values, grid, config.methods.n_sources)
    print(f"{name} peaks at {[tuple(round(c, 4) for c in p) for p in peaks]}")
    return 0


def cmd_music(args) -> int:
    return _run_baseline(
        args, "music",
        lambda cfg, covs, geoms, grid: noncoherent_music(
            covs, geoms, grid, cfg.methods.n_sources),
    )


def cmd_mvdr(args) -> int:
    return _run_baseline(
        args, "mvdr",
        lambda cfg, covs, geoms, grid: noncoherent_mvdr(
            covs, geoms, grid, cfg.methods.mvdr_diagonal_load),
    )


def cmd_mc_sweep(args) -> int:
    config = _load(args)
    out = _out_dir(args)
    results = mc_sweep(config)
    path = out / "results.csv"
    io.write_results_csv(results, path)
    print(f"wrote {len(results)} rows to {path}")
    return 0


def cmd_render(args) -> int:
    values, points = io.read_spectrum_csv(args.spectrum)
    xs = np.unique(points[:, 0])
    ys = np.unique(points[:, 1])
    if xs.size * ys.size != values.size:
        raise ValueError(f"spectrum file {args.spectrum} is not a full grid")
    grid = make_grid(
        ((xs.min() - 1e-9, xs.max() + 1e-9), (ys.min() - 1e-9, ys.max() + 1e-9)),
        (xs.size, ys.size),
    )
    io.render_spectrum_png(values, grid, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otloc",
        description="Multi-array source localization via transport barycenters",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help="master RNG seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--epsilon", type=float, help="entropy regularization")
        p.add_argument("--gamma", type=float, help="observation slack penalty")
        p.add_argument("--grid-res", dest="grid_res",
                       help="grid resolution, e.g. 40 or 40x30")
        if data:
            p.add_argument("--data", required=True,
                           help="directory written by 'simulate'")

    p_sim = sub.add_parser("simulate", help="write geometry and covariance files")
    common(p_sim)
    p_sim.add_argument("--angle", type=float, default=0.0,
                       help="misalignment rotation of the elliptical array, degrees")
    p_sim.add_argument("--exact", action="store_true",
                       help="noise-free covariances instead of sample estimates")
    p_sim.set_defaults(func=cmd_simulate)

    p_fuse = sub.add_parser("fuse", help="transport-barycenter spectrum estimate")
    common(p_fuse, data=True)
    p_fuse.set_defaults(func=cmd_fuse)

    p_music = sub.add_parser("music", help="non-coherent MUSIC pseudo-spectrum")
    common(p_music, data=True)
    p_music.set_defaults(func=cmd_music)

    p_mvdr = sub.add_parser("mvdr", help="non-coherent MVDR pseudo-spectrum")
    common(p_mvdr, data=True)
    p_mvdr.set_defaults(func=cmd_mvdr)

    p_sweep = sub.add_parser("mc-sweep", help="Monte-Carlo misalignment sweep")
    common(p_sweep)
    p_sweep.add_argument("--angles", help="comma-separated degrees, e.g. 0,5,10")
    p_sweep.add_argument("--trials", type=int, help="trials per angle")
    p_sweep.add_argument("--methods", help="comma-separated subset of "
                                           "fusion,music,mvdr")
    p_sweep.set_defaults(func=cmd_mc_sweep)

    p_render = sub.add_parser("render", help="spectrum CSV to grayscale PNG")
    p_render.add_argument("--spectrum", required=True, help="spectrum CSV file")
    p_render.add_argument("--out", default="spectrum.png", help="output PNG path")
    p_render.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
