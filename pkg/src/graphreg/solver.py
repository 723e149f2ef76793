"""Solvers for the semi-linear graph equation beta*Delta(u) + f(u - y) = 0.

The equation is the contract: ``beta`` here multiplies the graph Laplacian
directly.  It is the stationarity condition of the scaled fitting objective

    J(u) = (beta/4) * R(u) + (1/n) * sum_i F(u_i - y_i),

whose gradient is exactly (1/n) * (beta*Delta(u) + f(u - y)); the damped
Newton line search decreases J, so ``objective_history`` is that objective.
Equivalently, minimizing beta'*R(u) + (1/n)*sum F with the full Dirichlet
double sum corresponds to beta = 4*beta' in the equation.

At an index where u is maximal, (Delta u)_i >= 0 forces f(u_i - y_i) <= 0,
hence u_i <= y_i: converged solutions stay inside [min y, max y] for every
strictly convex loss (and symmetrically at the minimum).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NewtonStall, TooLargeForDense
from .geograph import GeometricGraph, dirichlet_energy, laplacian_apply
from .loss import LossModel, QUADRATIC

__all__ = [
    "SolverConfig",
    "DEFAULT_CONFIG",
    "SolveReport",
    "pcg",
    "residual",
    "objective_eval",
    "objective_grad",
    "solve_quadratic",
    "solve_semilinear",
    "dense_laplacian",
    "dense_spectral_solve",
    "max_principle_check",
]

DENSE_GUARD = 512


@dataclass(frozen=True)
class SolverConfig:
    """Numerical controls; beta is passed to the solve calls themselves."""

    newton_tol: float = 1e-10       # max-norm of the equation residual
    newton_max_iter: int = 50
    cg_tol: float = 1e-12           # relative 2-norm residual
    cg_max_iter: int | None = None  # None -> 10 * n
    damping: float = 0.5
    min_step: float = 2.0 ** -20
    jacobian_floor: float = 1e-10

    def __post_init__(self):
        if not (self.newton_tol > 0 and self.cg_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.newton_max_iter < 1 or (self.cg_max_iter is not None and self.cg_max_iter < 1):
            raise ValueError("iteration caps must be >= 1")


DEFAULT_CONFIG = SolverConfig()


@dataclass
class SolveReport:
    """Solution plus iteration history.

    ``residual_history`` holds max-norm residuals per Newton iterate;
    ``objective_history`` the line-search objective J (see module docstring),
    non-increasing by construction.  ``converged`` implies the final residual
    max-norm is <= newton_tol.
    """

    u: np.ndarray
    newton_iters: int
    cg_iters_total: int
    residual_history: list = field(default_factory=list)
    objective_history: list = field(default_factory=list)
    converged: bool = False


def pcg(apply_a, b, precond, tol, max_iter, x0=None):
    """Preconditioned conjugate gradient for SPD operators.

    ``precond`` is either a positive diagonal (array) or a callable applying
    an SPD approximate inverse.  Stops when ||r||_2 <= tol * ||b||_2.
    Returns (x, iterations, converged).
    """
    b = np.asarray(b, dtype=float)
    apply_m = precond if callable(precond) else (lambda r, d=precond: r / d)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_a(x) if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0, True
    threshold = tol * bnorm
    if np.linalg.norm(r) <= threshold:
        return x, 0, True
    z = apply_m(r)
    p = z.copy()
    rz = float(np.dot(r, z))
    for it in range(1, max_iter + 1):
        ap = apply_a(p)
        alpha = rz / float(np.dot(p, ap))
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= threshold:
            return x, it, True
        z = apply_m(r)
        rz_new = float(np.dot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter, False


def _check_lengths(graph: GeometricGraph, *vecs):
    out = []
    for v in vecs:
        v = np.asarray(v, dtype=float)
        if v.shape != (graph.n,):
            raise DimensionMismatch(f"expected vectors of length {graph.n}, got shape {v.shape}")
        out.append(v)
    return out


def residual(graph: GeometricGraph, u, y, beta: float, loss: LossModel) -> np.ndarray:
    """r_i = beta * (Delta u)_i + f(u_i - y_i)."""
    u, y = _check_lengths(graph, u, y)
    return beta * laplacian_apply(graph, u) + loss.f(u - y)


def objective_eval(graph: GeometricGraph, u, y, beta: float, loss: LossModel) -> float:
    """beta * R(u) + (1/n) sum_i F(u_i - y_i), with R the full Dirichlet sum."""
    u, y = _check_lengths(graph, u, y)
    return beta * dirichlet_energy(graph, u) + float(np.mean(loss.F(u - y)))


def objective_grad(graph: GeometricGraph, u, y, beta: float, loss: LossModel) -> np.ndarray:
    """Gradient of objective_eval: (4*beta/n) * Delta(u) + (1/n) * f(u - y)."""
    u, y = _check_lengths(graph, u, y)
    return (4.0 * beta / graph.n) * laplacian_apply(graph, u) + loss.f(u - y) / graph.n


def _search_objective(graph: GeometricGraph, u, y, beta: float, loss: LossModel) -> float:
    # J whose gradient is residual/n; see module docstring
    return objective_eval(graph, u, y, 0.25 * beta, loss)


def _degenerate_report(graph, y, beta, loss):
    # beta = 0: the equation reduces to f(u - y) = 0, i.e. u = y
    u = np.array(y, dtype=float)
    return SolveReport(
        u=u,
        newton_iters=0,
        cg_iters_total=0,
        residual_history=[0.0],
        objective_history=[_search_objective(graph, u, y, beta, loss)],
        converged=True,
    )


def solve_quadratic(graph: GeometricGraph, y, beta: float, cfg: SolverConfig = DEFAULT_CONFIG) -> SolveReport:
    """Solve (beta*Delta + I) u = y by preconditioned CG (quadratic loss).

    On a CG stall the current iterate is still returned, with
    ``converged=False``.
    """
    (y,) = _check_lengths(graph, y)
    if beta == 0.0:
        return _degenerate_report(graph, y, beta, QUADRATIC)
    max_iter = cfg.cg_max_iter if cfg.cg_max_iter is not None else 10 * graph.n

    def apply_a(v):
        return beta * laplacian_apply(graph, v) + v

    diag = beta * graph.weight_degrees + 1.0
    r0 = residual(graph, y, y, beta, QUADRATIC)
    obj0 = _search_objective(graph, y, y, beta, QUADRATIC)
    u, iters, ok = pcg(apply_a, y, diag, cfg.cg_tol, max_iter, x0=y)
    r1 = residual(graph, u, y, beta, QUADRATIC)
    final = float(np.max(np.abs(r1)))
    return SolveReport(
        u=u,
        newton_iters=1,
        cg_iters_total=iters,
        residual_history=[float(np.max(np.abs(r0))), final],
        objective_history=[obj0, _search_objective(graph, u, y, beta, QUADRATIC)],
        converged=bool(ok and final <= cfg.newton_tol),
    )


def solve_semilinear(
    graph: GeometricGraph,
    y,
    beta: float,
    loss: LossModel,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> SolveReport:
    """Damped Newton with matrix-free CG inner solves.

    Starts from u = y (so the label-range bound holds from the first
    iterate), solves (beta*Delta + D) delta = -r with
    D = diag(max(f'(u - y), jacobian_floor)), and backtracks on J until
    decrease.  Raises NewtonStall if no decrease exists at the minimum step.
    """
    (y,) = _check_lengths(graph, y)
    if beta == 0.0:
        return _degenerate_report(graph, y, beta, loss)
    max_cg = cfg.cg_max_iter if cfg.cg_max_iter is not None else 10 * graph.n

    u = np.array(y, dtype=float)
    r = residual(graph, u, y, beta, loss)
    res_hist = [float(np.max(np.abs(r)))]
    obj_hist = [_search_objective(graph, u, y, beta, loss)]
    cg_total = 0
    iters = 0
    converged = res_hist[-1] <= cfg.newton_tol

    while not converged and iters < cfg.newton_max_iter:
        d = np.maximum(loss.fprime(u - y), cfg.jacobian_floor)

        def apply_a(v, d=d):
            return beta * laplacian_apply(graph, v) + d * v

        delta, cg_iters, _ = pcg(apply_a, -r, beta * graph.weight_degrees + d, cfg.cg_tol, max_cg)
        cg_total += cg_iters

        step = 1.0
        while True:
            u_try = u + step * delta
            obj_try = _search_objective(graph, u_try, y, beta, loss)
            if obj_try <= obj_hist[-1]:
                break
            step *= cfg.damping
            if step < cfg.min_step:
                raise NewtonStall(
                    f"no objective decrease at step {step:g} (iteration {iters + 1})"
                )
        u = u_try
        r = residual(graph, u, y, beta, loss)
        res_hist.append(float(np.max(np.abs(r))))
        obj_hist.append(obj_try)
        iters += 1
        converged = res_hist[-1] <= cfg.newton_tol

    return SolveReport(
        u=u,
        newton_iters=iters,
        cg_iters_total=cg_total,
        residual_history=res_hist,
        objective_history=obj_hist,
        converged=bool(converged),
    )


def dense_laplacian(graph: GeometricGraph) -> np.ndarray:
    """Materialize Delta as a dense symmetric matrix (n <= 512 guard)."""
    if graph.n > DENSE_GUARD:
        raise TooLargeForDense(f"n={graph.n} exceeds the dense guard {DENSE_GUARD}")
    w = graph.w_csr.toarray()
    return np.diag(graph.weight_degrees) - w


def dense_spectral_solve(graph: GeometricGraph, y, beta: float) -> np.ndarray:
    """Solve (beta*Delta + I) u = y through the eigendecomposition of Delta.

    The spectral filter 1/(1 + beta*lambda) equals the exponential average
    int_0^inf e^-t e^(-t*beta*lambda) dt, so this doubles as a direct witness
    of the heat-kernel representation of the quadratic regressor.
    """
    (y,) = _check_lengths(graph, y)
    lam, vecs = np.linalg.eigh(dense_laplacian(graph))
    coeffs = vecs.T @ y
    return vecs @ (coeffs / (1.0 + beta * lam))


def max_principle_check(z, inequality, tol: float = 0.0) -> bool:
    """Test-side helper: does max(z) <= tol?

    ``inequality`` holds the pointwise values of
    -beta*Delta(z) - (g(z + h) - g(h)); the caller is responsible for only
    drawing conclusions when those values are all >= 0 (the hypothesis of
    the maximum principle).
    """
    z = np.asarray(z, dtype=float)
    np.asarray(inequality, dtype=float)
    return bool(np.max(z) <= tol)
