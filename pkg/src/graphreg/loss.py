"""Strictly convex losses, noise-averaged derivatives, and the modified trend.

The modified trend mu_f(x) is the unique root w of

    E[f(w - mu(x) - xi)] = integral f(w - mu(x) - s) p(s) ds = 0.

It equals mu for quadratic loss and any mean-zero noise, and differs from mu
for non-quadratic losses under asymmetric noise; that offset is the
asymptotic bias of the regressor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BracketFailure
from .manifolds import NoiseModel

__all__ = [
    "LossModel",
    "QUADRATIC",
    "QUARTIC",
    "quad_quartic",
    "ExpectedDerivative",
    "modified_trend",
    "modified_trend_values",
]

_GL_ORDER = 32
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)
_BISECT_TOL = 1e-12


@dataclass(frozen=True)
class LossModel:
    """F with F(0)=0, F >= 0, f = F' strictly increasing.

    Kinds: ``quadratic`` F = t^2/2, ``quartic`` F = t^4/4, and
    ``quad_quartic`` F = a t^2/2 + b t^4/4 with a > 0, b >= 0.  Pure quartic
    has f'(0) = 0; the solvers floor the Jacobian diagonal to stay
    nonsingular there.
    """

    kind: str  # 'quadratic' | 'quartic' | 'quad_quartic'
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("quadratic", "quartic", "quad_quartic"):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == "quad_quartic" and (not self.a > 0 or self.b < 0):
            raise ValueError("quad_quartic requires a > 0 and b >= 0")

    def F(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "quadratic":
            return 0.5 * t * t
        if self.kind == "quartic":
            return 0.25 * t ** 4
        return 0.5 * self.a * t * t + 0.25 * self.b * t ** 4

    def f(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "quadratic":
            return t
        if self.kind == "quartic":
            return t ** 3
        return self.a * t + self.b * t ** 3

    def fprime(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "quadratic":
            return np.ones_like(t)
        if self.kind == "quartic":
            return 3.0 * t * t
        return self.a + 3.0 * self.b * t * t


QUADRATIC = LossModel("quadratic")
QUARTIC = LossModel("quartic")


def quad_quartic(a: float, b: float) -> LossModel:
    return LossModel("quad_quartic", a=float(a), b=float(b))


@dataclass(frozen=True)
class ExpectedDerivative:
    """t -> E[f(t - xi)] for xi ~ noise, plus its t-derivative and primitive.

    Exact finite sums for the Bernoulli noises; order-32 Gauss-Legendre on
    the support for uniform noise, which is exact for the polynomial losses
    shipped here (degree <= 63).
    """

    loss: LossModel
    noise: NoiseModel

    def _nodes(self):
        if self.noise.is_discrete:
            return self.noise.atoms(), self.noise.probs()
        s = self.noise.sigma
        return s * _GL_NODES, 0.5 * _GL_WEIGHTS

    def value(self, t):
        atoms, probs = self._nodes()
        t = np.asarray(t, dtype=float)
        out = self.loss.f(t[..., None] - atoms) @ probs
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        atoms, probs = self._nodes()
        t = np.asarray(t, dtype=float)
        out = self.loss.fprime(t[..., None] - atoms) @ probs
        return float(out) if out.ndim == 0 else out

    def antiderivative(self, t):
        """E[F(t - xi)], the noise-averaged loss (used by line searches)."""
        atoms, probs = self._nodes()
        t = np.asarray(t, dtype=float)
        out = self.loss.F(t[..., None] - atoms) @ probs
        return float(out) if out.ndim == 0 else out


def _bisect_root(fn, lo: float, hi: float, tol: float = _BISECT_TOL) -> float:
    """Root of an increasing function by bisection; BracketFailure if unbracketed."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketFailure(f"no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # interval at floating-point resolution
            break
        fmid = fn(mid)
        if fmid == 0.0:
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=4096)
def _modified_trend_cached(loss: LossModel, noise: NoiseModel, mu_key: float) -> float:
    ed = ExpectedDerivative(loss, noise)
    b = noise.support_bound
    return _bisect_root(lambda w: ed.value(w - mu_key), mu_key - b, mu_key + b)


def modified_trend(loss: LossModel, noise: NoiseModel, mu_x: float) -> float:
    """The root w of E[f(w - mu_x - xi)] = 0, bisected to width < 1e-12.

    The bracket [mu_x - B, mu_x + B] always contains the root: f is strictly
    increasing with f(0) = 0, so the integrand is <= 0 at the left end and
    >= 0 at the right end.  Results are memoized on mu_x rounded to 1e-12.
    """
    return _modified_trend_cached(loss, noise, round(float(mu_x), 12))

def modified_trend_offset(loss: LossModel, noise: NoiseModel) -> float:
    """The constant mu_f - mu implied by i.i.d. noise (root of E[f(t - xi)] = 0)."""
    ed = ExpectedDerivative(loss, noise)
    b = noise.support_bound
    return _bisect_root(ed.value, -b, b)


def modified_trend_values(loss: LossModel, noise: NoiseModel, mu: np.ndarray) -> np.ndarray:
    """Vectorized mu_f over an array of trend values.

    With i.i.d. noise the root satisfies mu_f = mu + t* for a single offset
    t*, so one bisection serves the whole array (identical to the pointwise
    root up to bisection tolerance).
    """
    return np.asarray(mu, dtype=float) + modified_trend_offset(loss, noise)
