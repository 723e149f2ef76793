"""Continuum oracles on the flat torus.

Three independent reference computations back the graph pipeline:

  * a Gauss-Legendre quadrature of the nonlocal operator
    (2 / (tau_eta eps^(m+2))) * int eta(|x - x'|/eps) (h(x) - h(x')) dx',
    which the graph Laplacian estimates by sampling;
  * pointwise comparison of the graph Laplacian against the analytic
    Laplace-Beltrami values of a smooth trend;
  * a periodic finite-difference solver for the homogenized equation
    beta * Delta(v) + E[f(v - mu - xi)] = 0 on [0,1)^2, used to verify the
    smoothing-bias bound sup|v - mu_f| <= beta * |Delta mu|_inf / c1 with a
    measured convexity constant c1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NewtonStall, UnsupportedManifold
from .geograph import GeometricGraph, KernelSpec, laplacian_apply
from .loss import ExpectedDerivative, LossModel, modified_trend_offset
from .manifolds import FLAT_TORUS, NoiseModel, PointCloud, TrendSpec, trend_eval, trend_laplacian
from .solver import DEFAULT_CONFIG, SolverConfig, pcg

__all__ = [
    "ConsistencyReport",
    "pointwise_consistency",
    "nonlocal_laplacian",
    "ContinuumSolution",
    "continuum_solve",
    "grid_laplacian_apply",
    "BiasCheck",
    "bias_check",
]


@dataclass
class ConsistencyReport:
    """Sup errors of the graph Laplacian against the analytic one.

    ``interior_sup_error`` restricts to points farther than 2*eps from the
    boundary on the unit square; boundaryless manifolds have no exclusion,
    so there it equals ``sup_error``.
    """

    sup_error: float
    interior_sup_error: float
    n: int
    eps: float
    kernel: KernelSpec
    seed: int


def pointwise_consistency(cloud: PointCloud, graph: GeometricGraph, trend: TrendSpec) -> ConsistencyReport:
    """max_i |Delta_graph h(x_i) - Delta_M h(x_i)| for an analytic trend h."""
    h = trend_eval(trend, cloud.points, cloud.manifold)
    approx = laplacian_apply(graph, h)
    exact = trend_laplacian(trend, cloud.points, cloud.manifold)
    err = np.abs(approx - exact)
    sup = float(err.max())
    if cloud.manifold.kind == "unit_square":
        margin = 2.0 * graph.eps
        pts = cloud.points
        inside = (pts.min(axis=1) > margin) & (pts.max(axis=1) < 1.0 - margin)
        interior = float(err[inside].max()) if inside.any() else 0.0
    else:
        interior = sup
    return ConsistencyReport(
        sup_error=sup,
        interior_sup_error=interior,
        n=cloud.n,
        eps=graph.eps,
        kernel=graph.kernel,
        seed=cloud.seed,
    )


def nonlocal_laplacian(h, x, eps: float, kernel: KernelSpec, quad_order: int = 32) -> float:
    """Quadrature value of the nonlocal Laplacian of h at x on the flat torus.

    ``h`` maps an (k, 2) array of torus points to (k,) values.  Tensor
    Gauss-Legendre in polar coordinates over the eps-ball; exact enough
    (~1e-8 and better) for smooth h at quad_order >= 16.
    """
    if kernel.m != 2:
        raise UnsupportedManifold("nonlocal quadrature is implemented for m = 2 (flat torus)")
    if quad_order < 16:
        raise ValueError("quad_order must be >= 16")
    x = np.asarray(x, dtype=float).reshape(2)
    nodes_r, weights_r = np.polynomial.legendre.leggauss(quad_order)
    nodes_t, weights_t = np.polynomial.legendre.leggauss(2 * quad_order)
    r = 0.5 * eps * (nodes_r + 1.0)
    wr = 0.5 * eps * weights_r
    theta = np.pi * (nodes_t + 1.0)
    wt = np.pi * weights_t

    rr, tt = np.meshgrid(r, theta, indexing="ij")
    offsets = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1)
    pts = np.mod(x[None, None, :] + offsets, 1.0).reshape(-1, 2)
    hx = float(np.asarray(h(x[None, :])).reshape(-1)[0])
    diffs = hx - np.asarray(h(pts)).reshape(quad_order, 2 * quad_order)

    integrand = kernel.eval(rr / eps) * diffs * rr
    integral = float(wr @ integrand @ wt)
    return 2.0 / (kernel.tau_eta * eps ** 4) * integral


# --------------------------------------------------------------------------
# Periodic continuum solver


def grid_laplacian_apply(v: np.ndarray, h: float) -> np.ndarray:
    """Positive-convention 5-point periodic Laplacian: (4v - neighbors) / h^2."""
    return (
        4.0 * v
        - np.roll(v, 1, axis=0)
        - np.roll(v, -1, axis=0)
        - np.roll(v, 1, axis=1)
        - np.roll(v, -1, axis=1)
    ) / (h * h)


@dataclass
class ContinuumSolution:
    """Grid solution of the homogenized equation on the periodic unit square."""

    grid_n: int
    beta: float
    v: np.ndarray  # (grid_n, grid_n)
    loss: LossModel
    noise: NoiseModel
    trend: TrendSpec
    newton_iters: int
    residual_max: float


def _grid_points(grid_n: int) -> np.ndarray:
    coords = np.arange(grid_n) / grid_n
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=-1)


def continuum_solve(
    trend: TrendSpec,
    noise: NoiseModel,
    loss: LossModel,
    beta: float,
    grid_n: int,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> ContinuumSolution:
    """Damped Newton for beta*Delta(v) + E[f(v - mu - xi)] = 0 on the torus grid.

    The inner solves use CG preconditioned by the exact FFT inverse of
    beta*Delta + mean(D), which is circulant; a handful of iterations
    suffice.  grid_n must be a power of two >= 64.
    """
    if grid_n < 64 or grid_n & (grid_n - 1) != 0:
        raise ValueError("grid_n must be a power of two >= 64")
    h = 1.0 / grid_n
    mu = trend_eval(trend, _grid_points(grid_n), FLAT_TORUS).reshape(grid_n, grid_n)
    ed = ExpectedDerivative(loss, noise)

    if beta == 0.0:
        v = mu + modified_trend_offset(loss, noise)
        res = float(np.max(np.abs(ed.value(v - mu))))
        return ContinuumSolution(grid_n, beta, v, loss, noise, trend, 0, res)

    freqs = np.arange(grid_n)
    lam_1d = (2.0 - 2.0 * np.cos(2.0 * np.pi * freqs / grid_n)) / (h * h)
    lam = lam_1d[:, None] + lam_1d[None, :]

    def objective(v):
        # h^2 * [ (beta/2) <v, Delta v> + sum E[F(v - mu - xi)] ]; its gradient
        # is h^2 * residual, so Newton steps are descent directions
        quad = 0.5 * beta * float(np.vdot(v, grid_laplacian_apply(v, h)))
        return h * h * (quad + float(np.sum(ed.antiderivative(v - mu))))

    v = mu + modified_trend_offset(loss, noise)
    r = beta * grid_laplacian_apply(v, h) + ed.value(v - mu)
    obj = objective(v)
    iters = 0
    while float(np.max(np.abs(r))) > cfg.newton_tol and iters < cfg.newton_max_iter:
        d = np.maximum(ed.derivative(v - mu), cfg.jacobian_floor)
        dbar = float(d.mean())
        filt = 1.0 / (beta * lam + dbar)

        def apply_a(x, d=d):
            xg = x.reshape(grid_n, grid_n)
            return (beta * grid_laplacian_apply(xg, h) + d * xg).ravel()

        def apply_m(x, filt=filt):
            xg = x.reshape(grid_n, grid_n)
            return np.real(np.fft.ifft2(np.fft.fft2(xg) * filt)).ravel()

        delta, _, _ = pcg(apply_a, -r.ravel(), apply_m, cfg.cg_tol, 50 * grid_n)
        delta = delta.reshape(grid_n, grid_n)
        step = 1.0
        while True:
            v_try = v + step * delta
            obj_try = objective(v_try)
            if obj_try <= obj:
                break
            step *= cfg.damping
            if step < cfg.min_step:
                raise NewtonStall(f"continuum line search stalled at step {step:g}")
        v, obj = v_try, obj_try
        r = beta * grid_laplacian_apply(v, h) + ed.value(v - mu)
        iters += 1

    return ContinuumSolution(
        grid_n=grid_n,
        beta=beta,
        v=v,
        loss=loss,
        noise=noise,
        trend=trend,
        newton_iters=iters,
        residual_max=float(np.max(np.abs(r))),
    )


@dataclass
class BiasCheck:
    sup_dev: float
    bound: float
    c1: float


def bias_check(continuum: ContinuumSolution, trend: TrendSpec, loss: LossModel, noise: NoiseModel) -> BiasCheck:
    """Compare sup|v - mu_f| with beta * |Delta mu|_inf / c1.

    c1 is measured: the minimum of d/dt E[f(t - xi)] over
    [min(v - mu) - B, max(v - mu) + B], which covers every segment the
    comparison argument integrates over.
    """
    grid_n = continuum.grid_n
    pts = _grid_points(grid_n)
    mu = trend_eval(trend, pts, FLAT_TORUS).reshape(grid_n, grid_n)
    mu_f = mu + modified_trend_offset(loss, noise)
    sup_dev = float(np.max(np.abs(continuum.v - mu_f)))

    dev = continuum.v - mu
    b = noise.support_bound
    tgrid = np.linspace(float(dev.min()) - b, float(dev.max()) + b, 4097)
    ed = ExpectedDerivative(loss, noise)
    c1 = float(np.min(ed.derivative(tgrid)))
    lap_mu = trend_laplacian(trend, pts, FLAT_TORUS)
    bound = continuum.beta * float(np.max(np.abs(lap_mu))) / c1
    return BiasCheck(sup_dev=sup_dev, bound=bound, c1=c1)
