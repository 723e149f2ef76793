"""End-to-end experiment pipelines and rate studies.

A run samples a cloud, labels it, extends labels by Voronoi assignment when
q < n, builds the eps-graph, solves the graph equation, and reports the
error field against the modified trend (primary) and the raw trend
(secondary).  The untuned parameter rule eps = beta = n^(-1/5) from the
reference illustration is the default schedule.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import io_core
from .geograph import KernelSpec, build_graph
from .loss import LossModel, modified_trend_values
from .manifolds import ManifoldSpec, NoiseModel, TrendSpec, make_dataset, sample_cloud
from .semisup import knn_regress, voronoi_extend
from .solver import DEFAULT_CONFIG, SolverConfig, solve_quadratic, solve_semilinear

__all__ = [
    "Schedule",
    "ExperimentConfig",
    "ErrorReport",
    "interior_mask",
    "run_experiment",
    "rate_study",
    "render_heatmap",
]


@dataclass(frozen=True)
class Schedule:
    """Parameter rule: 'paper' sets eps = beta = n^(-1/5); 'explicit' pins both."""

    kind: str  # 'paper' | 'explicit'
    eps: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("paper", "explicit"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    def resolve(self, n: int):
        if self.kind == "paper":
            v = float(n) ** -0.2
            return v, v
        return self.eps, self.beta


@dataclass(frozen=True)
class ExperimentConfig:
    manifold: ManifoldSpec
    trend: TrendSpec
    noise: NoiseModel
    loss: LossModel
    kernel: KernelSpec
    n: int
    q: int
    schedule: Schedule
    seeds: tuple = (0,)
    out_dir: str | None = None
    knn_k: int = 5


@dataclass
class ErrorReport:
    """Per-run error summary; 'interior' restricts to [0.1, 0.9]^2 on the square."""

    seed: int
    n: int
    q: int
    eps: float
    beta: float
    errors_mu_f: np.ndarray = field(repr=False)
    errors_mu: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)
    sup_error: float
    interior_sup_error: float
    rmse: float
    interior_rmse: float
    knn_sup_error: float
    knn_rmse: float
    stage_seconds: dict
    converged: bool
    newton_iters: int


def interior_mask(manifold: ManifoldSpec, points: np.ndarray) -> np.ndarray:
    """Points away from the boundary layer; everything on boundaryless manifolds."""
    if manifold.kind == "unit_square":
        return (points.min(axis=1) >= 0.1) & (points.max(axis=1) <= 0.9)
    return np.ones(points.shape[0], dtype=bool)


def run_experiment(
    config: ExperimentConfig,
    seed: int | None = None,
    out_dir: str | None = None,
    solver_cfg: SolverConfig = DEFAULT_CONFIG,
) -> ErrorReport:
    """Run the full pipeline for one seed (default: the config's first seed)."""
    seed = config.seeds[0] if seed is None else seed
    out_dir = config.out_dir if out_dir is None else out_dir
    eps, beta = config.schedule.resolve(config.n)
    stages = {}

    t0 = time.perf_counter()
    cloud = sample_cloud(config.manifold, config.n, seed)
    dataset = make_dataset(cloud, config.trend, config.noise, config.q, seed + 1)
    stages["sample"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if config.q < config.n:
        y = voronoi_extend(dataset).extended_y
    else:
        y = dataset.labels
    stages["labels"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    graph = build_graph(cloud, eps, config.kernel)
    stages["graph"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if config.loss.kind == "quadratic":
        report = solve_quadratic(graph, y, beta, solver_cfg)
    else:
        report = solve_semilinear(graph, y, beta, config.loss, solver_cfg)
    stages["solve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mu = dataset.trend_values
    mu_f = modified_trend_values(config.loss, config.noise, mu)
    err_f = report.u - mu_f
    err_mu = report.u - mu
    inside = interior_mask(config.manifold, cloud.points)
    knn = knn_regress(dataset, config.knn_k)
    knn_err = knn - mu_f
    stages["evaluate"] = time.perf_counter() - t0

    result = ErrorReport(
        seed=seed,
        n=config.n,
        q=config.q,
        eps=eps,
        beta=beta,
        errors_mu_f=err_f,
        errors_mu=err_mu,
        interior=inside,
        sup_error=float(np.max(np.abs(err_f))),
        interior_sup_error=float(np.max(np.abs(err_f[inside]))),
        rmse=float(np.sqrt(np.mean(err_f ** 2))),
        interior_rmse=float(np.sqrt(np.mean(err_f[inside] ** 2))),
        knn_sup_error=float(np.max(np.abs(knn_err))),
        knn_rmse=float(np.sqrt(np.mean(knn_err ** 2))),
        stage_seconds=stages,
        converged=report.converged,
        newton_iters=report.newton_iters,
    )

    if out_dir is not None:
        _write_outputs(config, seed, cloud, report, result, out_dir)
    return result


def _write_outputs(config, seed, cloud, solve_report, result, out_dir):
    import os

    os.makedirs(out_dir, exist_ok=True)
    field_path = os.path.join(out_dir, f"errors_seed{seed}.csv")
    pts2 = cloud.points[:, :2]
    io_core.error_field_to_csv(field_path, pts2, result.errors_mu_f, result.errors_mu)
    manifest = io_core.RunManifest(
        config_json=io_core.serialize_config(config),
        versions=_versions(),
        seeds=[seed],
        stage_seconds=result.stage_seconds,
        output_digests={field_path: io_core.sha256_of(field_path)},
    )
    io_core.write_manifest(os.path.join(out_dir, f"manifest_seed{seed}.json"), manifest)


def _versions() -> dict:
    import scipy

    from . import __version__

    return {"graphreg": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def rate_study(config: ExperimentConfig, n_list, seeds) -> list[dict]:
    """Median errors along an increasing n schedule.

    Returns one row per n: {n, eps, beta, median_sup, median_interior_sup,
    median_rmse}, medians over the given seeds with the config's schedule.
    """
    n_list = list(n_list)
    if any(b >= a for a, b in zip(n_list[1:], n_list)):
        raise ValueError("n_list must be strictly increasing")
    rows = []
    for n in n_list:
        cfg = ExperimentConfig(
            manifold=config.manifold,
            trend=config.trend,
            noise=config.noise,
            loss=config.loss,
            kernel=config.kernel,
            n=n,
            q=n if config.q == config.n else max(1, round(n * config.q / config.n)),
            schedule=config.schedule,
            seeds=tuple(seeds),
            out_dir=None,
            knn_k=config.knn_k,
        )
        eps, beta = cfg.schedule.resolve(n)
        sups, interiors, rmses = [], [], []
        for seed in seeds:
            report = run_experiment(cfg, seed=seed)
            sups.append(report.sup_error)
            interiors.append(report.interior_sup_error)
            rmses.append(report.rmse)
        rows.append(
            {
                "n": n,
                "eps": eps,
                "beta": beta,
                "median_sup": float(np.median(sups)),
                "median_interior_sup": float(np.median(interiors)),
                "median_rmse": float(np.median(rmses)),
            }
        )
    return rows


def render_heatmap(csv_path, out_path, grid: int = 256, cmap: str = "gray") -> None:
    """Rasterize a field CSV (idx,x1,x2,value,...) to an image.

    The field is gridded by nearest sample on a grid x grid raster.  The
    default grayscale map keeps pixel intensity monotone in the value.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pts, vals = io_core.read_field_csv(csv_path)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    centers = (np.arange(grid) + 0.5) / grid
    gx, gy = np.meshgrid(lo[0] + centers * span[0], lo[1] + centers * span[1], indexing="ij")
    queries = np.stack([gx.ravel(), gy.ravel()], axis=-1)

    img = np.empty(grid * grid)
    chunk = 1024
    for start in range(0, queries.shape[0], chunk):
        block = queries[start:start + chunk]
        d2 = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
        img[start:start + chunk] = vals[np.argmin(d2, axis=1)]
    field = img.reshape(grid, grid).T  # x1 horizontal, x2 vertical

    vmin, vmax = float(field.min()), float(field.max())
    if vmin == vmax:
        gray = np.full((grid, grid), 0.5)
        plt.imsave(out_path, gray, cmap=cmap, vmin=0.0, vmax=1.0, origin="lower")
    else:
        plt.imsave(out_path, field, cmap=cmap, vmin=vmin, vmax=vmax, origin="lower")
