"""Command-line interface.

Exit codes: 0 on success, 2 on validation/parse errors, 3 on solver
non-convergence.
"""

from __future__ import annotations

import math
import sys

import click
import numpy as np

from . import io_core
from .errors import (
    GraphRegError,
    InvalidK,
    InvalidLabelCount,
    MalformedCsv,
    NewtonStall,
    ParseError,
    ValidationError,
)
from .geograph import KernelSpec, build_graph
from .loss import LossModel
from .manifolds import NoiseModel, TrendSpec, make_dataset, manifold_by_kind, sample_cloud
from .semisup import out_of_sample, voronoi_extend
from .solver import SolverConfig, residual, solve_quadratic, solve_semilinear
from .validate import bias_check, continuum_solve, pointwise_consistency

_MANIFOLD_CHOICE = click.Choice(["unit_square", "flat_torus", "sphere"])
_KERNEL_CHOICE = click.Choice(["bump", "indicator"])

_VALIDATION_ERRORS = (ValidationError, ParseError, MalformedCsv, InvalidLabelCount, InvalidK, ValueError)


def parse_loss(text: str) -> LossModel:
    """quadratic | quartic | quadquartic:a,b"""
    if text == "quadratic":
        return LossModel("quadratic")
    if text == "quartic":
        return LossModel("quartic")
    if text.startswith("quadquartic:"):
        a, b = text.split(":", 1)[1].split(",")
        return LossModel("quad_quartic", a=float(a), b=float(b))
    raise ValidationError(f"cannot parse loss {text!r}")


def parse_noise(text: str) -> NoiseModel:
    """sym:sigma | asym:sigma:pplus | uniform:sigma"""
    parts = text.split(":")
    try:
        if parts[0] == "sym" and len(parts) == 2:
            return NoiseModel("sym_bernoulli", sigma=float(parts[1]))
        if parts[0] == "asym" and len(parts) == 3:
            return NoiseModel("asym_bernoulli", sigma=float(parts[1]), p_plus=float(parts[2]))
        if parts[0] == "uniform" and len(parts) == 2:
            return NoiseModel("uniform", sigma=float(parts[1]))
    except ValueError as exc:
        raise ValidationError(f"noise {text!r}: {exc}") from None
    raise ValidationError(f"cannot parse noise {text!r}")


def parse_trend(text: str) -> TrendSpec:
    """paper_sine | constant:c | sines:c:k1,k2[+c:k1,k2...]"""
    if text == "paper_sine":
        return TrendSpec("paper_sine")
    if text.startswith("constant:"):
        return TrendSpec("constant", value=float(text.split(":", 1)[1]))
    if text.startswith("sines:"):
        coeffs, freqs = [], []
        for term in text[len("sines:"):].split("+"):
            c, ks = term.split(":")
            coeffs.append(float(c))
            freqs.append(tuple(int(k) for k in ks.split(",")))
        return TrendSpec("sum_of_sines", coefficients=tuple(coeffs), frequencies=tuple(freqs))
    raise ValidationError(f"cannot parse trend {text!r}")


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    try:
        return fn()
    except NewtonStall as exc:
        _fail(3, f"solver stalled: {exc}")
    except _VALIDATION_ERRORS as exc:
        _fail(2, str(exc))
    except GraphRegError as exc:
        _fail(2, str(exc))


@click.group()
def main():
    """Graph-Laplacian regression on sampled point clouds."""


@main.command()
@click.option("--manifold", type=_MANIFOLD_CHOICE, default="unit_square", show_default=True)
@click.option("--n", type=int, required=True, help="Number of sample points.")
@click.option("--q", type=int, default=None, help="Labeled count (default: n).")
@click.option("--trend", default="paper_sine", show_default=True)
@click.option("--noise", default="sym:0.3", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def generate(manifold, n, q, trend, noise, seed, out):
    """Sample a labeled dataset and write it as CSV."""

    def body():
        man = manifold_by_kind(manifold)
        cloud = sample_cloud(man, n, seed)
        dataset = make_dataset(cloud, parse_trend(trend), parse_noise(noise), q if q is not None else n, seed + 1)
        io_core.dataset_to_csv(out, dataset)
        click.echo(f"wrote {out} (n={n}, q={dataset.q})")

    _guarded(body)


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--manifold", type=_MANIFOLD_CHOICE, default="unit_square", show_default=True)
@click.option("--eps", type=float, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--loss", default="quadratic", show_default=True)
@click.option("--kernel", type=_KERNEL_CHOICE, default="bump", show_default=True)
@click.option("--newton-max-iter", type=int, default=50, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def solve(in_path, manifold, eps, beta, loss, kernel, newton_max_iter, out):
    """Solve the graph equation on a dataset CSV; partially labeled datasets
    are Voronoi-extended first."""

    def body():
        man = manifold_by_kind(manifold)
        dataset = io_core.dataset_from_csv(in_path, man)
        y = voronoi_extend(dataset).extended_y if dataset.q < dataset.cloud.n else dataset.labels
        graph = build_graph(dataset.cloud, eps, KernelSpec(kernel, man.intrinsic_dim))
        loss_model = parse_loss(loss)
        cfg = SolverConfig(newton_max_iter=newton_max_iter)
        if loss_model.kind == "quadratic":
            report = solve_quadratic(graph, y, beta, cfg)
        else:
            report = solve_semilinear(graph, y, beta, loss_model, cfg)
        io_core.u_report_to_csv(out, report.u, residual(graph, report.u, y, beta, loss_model))
        click.echo(
            f"wrote {out} (newton_iters={report.newton_iters}, "
            f"residual={report.residual_history[-1]:.3e}, converged={report.converged})"
        )
        if not report.converged:
            _fail(3, "solver did not reach tolerance")

    _guarded(body)


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--manifold", type=_MANIFOLD_CHOICE, default="unit_square", show_default=True)
@click.option("--out", type=click.Path(), required=True)
def extend(in_path, manifold, out):
    """Voronoi-extend the labels of a dataset CSV to all points."""

    def body():
        dataset = io_core.dataset_from_csv(in_path, manifold_by_kind(manifold))
        io_core.extension_to_csv(out, voronoi_extend(dataset))
        click.echo(f"wrote {out}")

    _guarded(body)


@main.command()
@click.option("--points", "points_path", type=click.Path(exists=True), required=True, help="Dataset CSV of the cloud.")
@click.option("--u", "u_path", type=click.Path(exists=True), required=True, help="Solved values CSV.")
@click.option("--queries", type=click.Path(exists=True), required=True, help="Query points CSV (idx,x1,..,xd).")
@click.option("--manifold", type=_MANIFOLD_CHOICE, default="unit_square", show_default=True)
@click.option("--out", type=click.Path(), required=True)
def predict(points_path, u_path, queries, manifold, out):
    """1-NN out-of-sample prediction at query points."""

    def body():
        man = manifold_by_kind(manifold)
        dataset = io_core.dataset_from_csv(points_path, man)
        u = io_core.u_from_csv(u_path)
        qpts = io_core.points_from_csv(queries, man.ambient_dim)
        io_core.predictions_to_csv(out, out_of_sample(dataset.cloud, u, qpts))
        click.echo(f"wrote {out} ({len(qpts)} predictions)")

    _guarded(body)


@main.command()
@click.option("--manifold", type=_MANIFOLD_CHOICE, default="flat_torus", show_default=True)
@click.option("--trend", default="sines:1:1,0", show_default=True)
@click.option("--n", "n_values", type=int, multiple=True, required=True)
@click.option("--eps", type=float, default=None, help="Fixed eps (default: (log n / n)^(1/4)).")
@click.option("--kernel", type=_KERNEL_CHOICE, default="bump", show_default=True)
@click.option("--seeds", type=int, default=5, show_default=True, help="Seeds 0..seeds-1.")
@click.option("--out", type=click.Path(), required=True)
def consistency(manifold, trend, n_values, eps, kernel, seeds, out):
    """Graph-Laplacian pointwise consistency study; emits one row per (n, seed)."""

    def body():
        man = manifold_by_kind(manifold)
        trend_spec = parse_trend(trend)
        rows = []
        for n in n_values:
            e = eps if eps is not None else (math.log(n) / n) ** 0.25
            for seed in range(seeds):
                cloud = sample_cloud(man, n, seed)
                graph = build_graph(cloud, e, KernelSpec(kernel, man.intrinsic_dim))
                rep = pointwise_consistency(cloud, graph, trend_spec)
                rows.append((n, e, seed, rep.sup_error, rep.interior_sup_error))
        io_core.write_csv(out, ["n", "eps", "seed", "sup_error", "interior_sup_error"], rows)
        click.echo(f"wrote {out} ({len(rows)} rows)")

    _guarded(body)


@main.command()
@click.option("--betas", default="0.05,0.025,0.0125", show_default=True)
@click.option("--grid-n", type=int, default=128, show_default=True)
@click.option("--loss", default="quartic", show_default=True)
@click.option("--noise", default="asym:0.6:0.8", show_default=True)
@click.option("--trend", default="sines:0.5:1,0+0.5:0,1", show_default=True)
@click.option("--out", type=click.Path(), required=True)
def bias(betas, grid_n, loss, noise, trend, out):
    """Continuum smoothing-bias check on the torus; one row per beta."""

    def body():
        loss_model = parse_loss(loss)
        noise_model = parse_noise(noise)
        trend_spec = parse_trend(trend)
        rows = []
        for beta_text in betas.split(","):
            beta = float(beta_text)
            sol = continuum_solve(trend_spec, noise_model, loss_model, beta, grid_n)
            chk = bias_check(sol, trend_spec, loss_model, noise_model)
            rows.append((beta, grid_n, chk.sup_dev, chk.bound))
        io_core.write_csv(out, ["beta", "grid_n", "sup_dev", "bound"], rows)
        click.echo(f"wrote {out} ({len(rows)} rows)")

    _guarded(body)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None, help="Override: run only this seed.")
@click.option("--out", type=click.Path(), default=None, help="Output directory override.")
def experiment(config_path, seed, out):
    """Run the full pipeline for every seed in the config."""

    def body():
        from .experiments import run_experiment

        config = io_core.load_config(config_path)
        seeds = [seed] if seed is not None else list(config.seeds)
        all_converged = True
        for s in seeds:
            rep = run_experiment(config, seed=s, out_dir=out)
            all_converged &= rep.converged
            click.echo(
                f"seed={s} eps={rep.eps:.4g} beta={rep.beta:.4g} "
                f"sup={rep.sup_error:.4g} interior_sup={rep.interior_sup_error:.4g} "
                f"rmse={rep.rmse:.4g} converged={rep.converged}"
            )
        if not all_converged:
            _fail(3, "at least one solve did not converge")

    _guarded(body)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--n-list", default="1000,4000,16000", show_default=True)
@click.option("--seeds", type=int, default=5, show_default=True, help="Seeds 0..seeds-1.")
@click.option("--out", type=click.Path(), required=True)
def rates(config_path, n_list, seeds, out):
    """Rate study along an increasing n schedule."""

    def body():
        from .experiments import rate_study

        config = io_core.load_config(config_path)
        ns = [int(v) for v in n_list.split(",")]
        rows = rate_study(config, ns, list(range(seeds)))
        io_core.write_csv(
            out,
            ["n", "eps", "beta", "median_sup", "median_interior_sup", "median_rmse"],
            [(r["n"], r["eps"], r["beta"], r["median_sup"], r["median_interior_sup"], r["median_rmse"]) for r in rows],
        )
        click.echo(f"wrote {out} ({len(rows)} rows)")

    _guarded(body)


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--grid", type=int, default=256, show_default=True)
def heatmap(in_path, out, grid):
    """Render a field CSV to an image."""

    def body():
        from .experiments import render_heatmap

        render_heatmap(in_path, out, grid=grid)
        click.echo(f"wrote {out}")

    _guarded(body)


if __name__ == "__main__":
    main()
