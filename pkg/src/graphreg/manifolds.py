"""Synthetic ground truth: model manifolds, point clouds, trends, noise, labels.

Everything here is deterministic given a seed.  Clouds are sampled with
numpy's PCG64 generator, noise draws use a separate generator owned by the
dataset, and sampling order is index order, so fixtures are reproducible
bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidLabelCount, UnsupportedTrendManifoldPair

__all__ = [
    "ManifoldSpec",
    "UNIT_SQUARE",
    "FLAT_TORUS",
    "SPHERE",
    "PointCloud",
    "TrendSpec",
    "PAPER_SINE",
    "constant_trend",
    "sum_of_sines",
    "NoiseModel",
    "sym_bernoulli",
    "asym_bernoulli",
    "uniform_noise",
    "LabeledDataset",
    "sample_cloud",
    "trend_eval",
    "trend_laplacian",
    "make_dataset",
]


@dataclass(frozen=True)
class ManifoldSpec:
    """One of the model manifolds: unit square, flat torus, or unit sphere.

    The square and torus live in [0,1]^2 (ambient dimension 2, intrinsic 2);
    the torus carries the periodic metric.  The sphere is the unit sphere in
    R^3 (intrinsic dimension 2), with the ambient Euclidean (chordal) metric.
    """

    kind: str  # 'unit_square' | 'flat_torus' | 'sphere'

    def __post_init__(self):
        if self.kind not in ("unit_square", "flat_torus", "sphere"):
            raise ValueError(f"unknown manifold kind {self.kind!r}")

    @property
    def ambient_dim(self) -> int:
        return 3 if self.kind == "sphere" else 2

    @property
    def intrinsic_dim(self) -> int:
        return 2

    @property
    def periodic(self) -> bool:
        return self.kind == "flat_torus"

    @property
    def diameter(self) -> float:
        """Largest possible distance between two points (in this metric)."""
        if self.kind == "unit_square":
            return math.sqrt(2.0)
        if self.kind == "flat_torus":
            return math.sqrt(0.5)
        return 2.0

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Boolean membership mask for an (k, d) array of points."""
        pts = np.atleast_2d(points)
        if self.kind == "sphere":
            return np.abs(np.linalg.norm(pts, axis=1) - 1.0) <= tol
        return ((pts >= -tol) & (pts <= 1.0 + tol)).all(axis=1)

    def pair_distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Distance between paired rows of `a` and `b`."""
        return np.sqrt(self.pair_sq_distance(a, b))

    def pair_sq_distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        delta = np.abs(a - b)
        if self.periodic:
            delta = np.minimum(delta, 1.0 - delta)
        return (delta * delta).sum(axis=-1)

    def sq_distance_matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """All-pairs squared distances, shape (len(a), len(b))."""
        delta = np.abs(a[:, None, :] - b[None, :, :])
        if self.periodic:
            delta = np.minimum(delta, 1.0 - delta)
        return (delta * delta).sum(axis=-1)


UNIT_SQUARE = ManifoldSpec("unit_square")
FLAT_TORUS = ManifoldSpec("flat_torus")
SPHERE = ManifoldSpec("sphere")

_MANIFOLDS = {m.kind: m for m in (UNIT_SQUARE, FLAT_TORUS, SPHERE)}


def manifold_by_kind(kind: str) -> ManifoldSpec:
    try:
        return _MANIFOLDS[kind]
    except KeyError:
        raise ValueError(f"unknown manifold kind {kind!r}") from None


@dataclass(frozen=True)
class PointCloud:
    """n points sampled uniformly on a manifold, reproducible from the seed."""

    manifold: ManifoldSpec
    points: np.ndarray  # (n, d), float64
    n: int
    seed: int


def sample_cloud(spec: ManifoldSpec, n: int, seed: int) -> PointCloud:
    """Sample n i.i.d. uniform points on the manifold.

    Uniform on [0,1)^2 for the square and torus; uniform area measure on the
    sphere via normalized 3-d Gaussians.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if spec.kind == "sphere":
        g = rng.standard_normal((n, 3))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    else:
        pts = rng.random((n, 2))
    return PointCloud(manifold=spec, points=pts, n=n, seed=seed)


# --------------------------------------------------------------------------
# Trends


@dataclass(frozen=True)
class TrendSpec:
    """Smooth trend with an analytic (positive semi-definite) Laplacian.

    Kinds:
      * ``paper_sine``:  0.5*sin(pi*x1) + 0.5*sin(pi*x2) on flat manifolds.
      * ``constant``:    the value ``value`` everywhere.
      * ``sum_of_sines``: on flat manifolds, sum_t c_t * sin(2*pi <k_t, x>)
        with integer wave vectors k_t; on the sphere each term is instead the
        first-degree harmonic c_t * <k_t, x>, the only entries with a closed
        Laplace-Beltrami value there.

    The Laplacian follows the sign convention Delta = -div(grad), so
    Delta sin(pi x) = +pi^2 sin(pi x) on flat domains and Delta <k, x> =
    2 <k, x> on the unit sphere.
    """

    kind: str  # 'paper_sine' | 'constant' | 'sum_of_sines'
    value: float = 0.0
    coefficients: tuple = ()
    frequencies: tuple = ()  # tuple of integer wave vectors

    def __post_init__(self):
        if self.kind not in ("paper_sine", "constant", "sum_of_sines"):
            raise ValueError(f"unknown trend kind {self.kind!r}")
        if self.kind == "sum_of_sines" and len(self.coefficients) != len(self.frequencies):
            raise ValueError("coefficients and frequencies must have equal length")


PAPER_SINE = TrendSpec("paper_sine")


def constant_trend(c: float) -> TrendSpec:
    return TrendSpec("constant", value=float(c))


def sum_of_sines(coefficients, frequencies) -> TrendSpec:
    coeffs = tuple(float(c) for c in coefficients)
    freqs = tuple(tuple(int(k) for k in kvec) for kvec in frequencies)
    return TrendSpec("sum_of_sines", coefficients=coeffs, frequencies=freqs)


def trend_eval(trend: TrendSpec, x: np.ndarray, manifold: ManifoldSpec = UNIT_SQUARE):
    """Evaluate the trend at a point (d,) or batch (k, d); returns scalar or (k,)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    scalar = np.ndim(x) == 1
    if trend.kind == "constant":
        out = np.full(pts.shape[0], trend.value)
    elif trend.kind == "paper_sine":
        out = 0.5 * np.sin(np.pi * pts[:, 0]) + 0.5 * np.sin(np.pi * pts[:, 1])
    else:
        out = np.zeros(pts.shape[0])
        for c, kvec in zip(trend.coefficients, trend.frequencies):
            k = np.asarray(kvec, dtype=float)
            if manifold.kind == "sphere":
                out += c * (pts @ k)
            else:
                out += c * np.sin(2.0 * np.pi * (pts @ k[: pts.shape[1]]))
    return float(out[0]) if scalar else out


def trend_laplacian(trend: TrendSpec, x: np.ndarray, manifold: ManifoldSpec = UNIT_SQUARE):
    """Analytic Laplace-Beltrami value Delta_M mu(x) (positive convention)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    scalar = np.ndim(x) == 1
    if trend.kind == "constant":
        out = np.zeros(pts.shape[0])
    elif trend.kind == "paper_sine":
        if manifold.kind == "sphere":
            raise UnsupportedTrendManifoldPair("paper_sine has no closed Laplacian on the sphere")
        out = (np.pi ** 2) * (
            0.5 * np.sin(np.pi * pts[:, 0]) + 0.5 * np.sin(np.pi * pts[:, 1])
        )
    else:
        out = np.zeros(pts.shape[0])
        for c, kvec in zip(trend.coefficients, trend.frequencies):
            k = np.asarray(kvec, dtype=float)
            if manifold.kind == "sphere":
                # first-degree spherical harmonic, eigenvalue l(l+1) = 2
                out += 2.0 * c * (pts @ k)
            else:
                ksq = float(k @ k)
                out += c * (2.0 * np.pi) ** 2 * ksq * np.sin(2.0 * np.pi * (pts @ k[: pts.shape[1]]))
    return float(out[0]) if scalar else out


# --------------------------------------------------------------------------
# Noise


@dataclass(frozen=True)
class NoiseModel:
    """Bounded, mean-zero label noise.

    Kinds:
      * ``sym_bernoulli``: +/- sigma with probability 1/2 each.
      * ``asym_bernoulli``: +sigma with probability p_plus, and
        -sigma*p_plus/(1-p_plus) otherwise (balanced to mean zero).
      * ``uniform``: uniform on [-sigma, sigma].
    """

    kind: str  # 'sym_bernoulli' | 'asym_bernoulli' | 'uniform'
    sigma: float
    p_plus: float = 0.8

    def __post_init__(self):
        if self.kind not in ("sym_bernoulli", "asym_bernoulli", "uniform"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.kind == "asym_bernoulli" and not 0.0 < self.p_plus < 1.0:
            raise ValueError("p_plus must be in (0, 1)")

    @property
    def is_discrete(self) -> bool:
        return self.kind != "uniform"

    @property
    def support_bound(self) -> float:
        """B with P(|xi| <= B) = 1."""
        if self.kind == "asym_bernoulli":
            return max(self.sigma, self.sigma * self.p_plus / (1.0 - self.p_plus))
        return self.sigma

    def atoms(self) -> np.ndarray:
        if self.kind == "sym_bernoulli":
            return np.array([self.sigma, -self.sigma])
        if self.kind == "asym_bernoulli":
            return np.array([self.sigma, -self.sigma * self.p_plus / (1.0 - self.p_plus)])
        raise ValueError("uniform noise has no atoms")

    def probs(self) -> np.ndarray:
        if self.kind == "sym_bernoulli":
            return np.array([0.5, 0.5])
        if self.kind == "asym_bernoulli":
            return np.array([self.p_plus, 1.0 - self.p_plus])
        raise ValueError("uniform noise has no atoms")

    def mean(self) -> float:
        """Exact analytic mean; zero by construction for every kind."""
        return 0.0

    def second_moment(self) -> float:
        if self.kind == "uniform":
            return self.sigma ** 2 / 3.0
        atoms, probs = self.atoms(), self.probs()
        return float(probs @ (atoms * atoms))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(-self.sigma, self.sigma, size)
        atoms = self.atoms()
        take_plus = rng.random(size) < (0.5 if self.kind == "sym_bernoulli" else self.p_plus)
        return np.where(take_plus, atoms[0], atoms[1])


def sym_bernoulli(sigma: float) -> NoiseModel:
    return NoiseModel("sym_bernoulli", sigma=float(sigma))


def asym_bernoulli(sigma: float, p_plus: float = 0.8) -> NoiseModel:
    return NoiseModel("asym_bernoulli", sigma=float(sigma), p_plus=float(p_plus))


def uniform_noise(sigma: float) -> NoiseModel:
    return NoiseModel("uniform", sigma=float(sigma))


# --------------------------------------------------------------------------
# Labeled datasets


@dataclass(frozen=True)
class LabeledDataset:
    """A point cloud with labels y_i = mu(x_i) + xi_i on its first q points.

    ``trend_values`` holds mu at every point and is used only for evaluation,
    never by the fitting pipeline.
    """

    cloud: PointCloud
    q: int
    labels: np.ndarray  # (q,)
    trend_values: np.ndarray  # (n,)
    noise_seed: int


def make_dataset(
    cloud: PointCloud,
    trend: TrendSpec,
    noise: NoiseModel,
    q: int,
    seed: int,
) -> LabeledDataset:
    """Label the first q points of the cloud with noisy trend observations."""
    if not 1 <= q <= cloud.n:
        raise InvalidLabelCount(f"q={q} outside [1, {cloud.n}]")
    mu = trend_eval(trend, cloud.points, cloud.manifold)
    rng = np.random.default_rng(seed)
    draws = noise.sample(rng, q)
    labels = mu[:q] + draws
    return LabeledDataset(cloud=cloud, q=q, labels=labels, trend_values=mu, noise_seed=seed)
