"""Winner-take-all perceptron accuracy at three levels of approximation.

* :func:`predict_full` -- correlated Gaussian inputs, orthant integral over
  hit-minus-distractor differences.
* :func:`predict_independent` -- independent Gaussians, one integral.
* :func:`predict_iid` -- independent and identically distributed distractors.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from ..errors import ParameterError
from .mvn import orthant_probability

SIGMA_FLOOR = 1e-12
GH_NODES = 128
GH_MAX_NODES = 256
QUAD_TOL = 1e-8
# above this sigma_h / sigma_r ratio the integrand's step is too sharp for fixed nodes
GH_MAX_RATIO = 2.0


@dataclass(frozen=True)
class MomentStatsReduced:
    """Hit and reject moments of the output-neuron inputs."""

    mu_h: float
    sigma_h: float
    mu_r: float
    sigma_r: float

    def __post_init__(self):
        if self.sigma_h < 0 or self.sigma_r < 0:
            raise ParameterError("standard deviations must be non-negative")

    def scaled(self, c: float) -> "MomentStatsReduced":
        return MomentStatsReduced(c * self.mu_h, c * self.sigma_h, c * self.mu_r, c * self.sigma_r)


@dataclass(frozen=True)
class MomentStatsFull:
    """Per-true-class mean vectors and covariances of the D output-neuron inputs."""

    means: np.ndarray  # (D, D): row i is the mean of h given class i
    covs: np.ndarray  # (D, D, D)
    priors: np.ndarray = field(default=None)

    def __post_init__(self):
        D = self.means.shape[0]
        if self.priors is None:
            object.__setattr__(self, "priors", np.full(D, 1.0 / D))
        if self.means.shape != (D, D) or self.covs.shape != (D, D, D):
            raise ParameterError("means must be (D, D) and covs (D, D, D)")
        if abs(float(np.sum(self.priors)) - 1.0) > 1e-12 or np.any(self.priors < 0):
            raise ParameterError("priors must be non-negative and sum to one")

    @property
    def D(self) -> int:
        return self.means.shape[0]

    def reduced(self) -> MomentStatsReduced:
        """Pool hit and reject marginals across classes (prior-weighted)."""
        D = self.D
        hit = np.eye(D, dtype=bool)
        var = np.array([np.diag(c) for c in self.covs])
        w = self.priors[:, None]
        mu_h = float(np.sum(self.priors * self.means[hit]))
        mu_r = float(np.sum((w * self.means)[~hit]) / (D - 1))
        # total variance = within + between
        var_h = float(np.sum(self.priors * (var[hit] + (self.means[hit] - mu_h) ** 2)))
        var_r = float(np.sum((w * (var + (self.means - mu_r) ** 2))[~hit]) / (D - 1))
        return MomentStatsReduced(mu_h, math.sqrt(var_h), mu_r, math.sqrt(var_r))


@dataclass(frozen=True)
class FullPrediction:
    per_class: np.ndarray
    accuracy: float
    error: float
    converged: bool


def _floor(sigma: float, scale: float) -> float:
    return sigma if sigma > 0 else SIGMA_FLOOR * max(scale, 1.0)


def predict_full(stats: MomentStatsFull, tol: float = 1e-4, seed: int = 0) -> FullPrediction:
    D = stats.D
    scale = float(np.max(np.abs(stats.means))) if stats.means.size else 1.0
    p = np.empty(D)
    err = 0.0
    ok = True
    for i in range(D):
        A = -np.eye(D)[np.arange(D) != i]
        A[:, i] = 1.0
        mean = A @ stats.means[i]
        cov = A @ stats.covs[i] @ A.T
        cov = 0.5 * (cov + cov.T)
        cov[np.diag_indices_from(cov)] += (SIGMA_FLOOR * max(scale, 1.0)) ** 2
        if D == 2:
            p[i] = ndtr(mean[0] / math.sqrt(cov[0, 0]))
            continue
        res = orthant_probability(mean, cov, tol=tol, seed=seed)
        p[i], ok, err = res.value, ok and res.converged, max(err, res.error)
    return FullPrediction(p, float(stats.priors @ p), err, ok)


def predict_independent(means, stds, i: int) -> float:
    """Accuracy for true class ``i`` when the D inputs are independent Gaussians."""
    means = np.asarray(means, dtype=float)
    stds = np.asarray(stds, dtype=float)
    if np.any(stds < 0):
        raise ParameterError("standard deviations must be non-negative")
    scale = float(np.max(np.abs(means)))
    stds = np.array([_floor(s, scale) for s in stds])
    others = np.arange(len(means)) != i
    mu_o, sd_o = means[others], stds[others]
    mu_i, sd_i = means[i], stds[i]

    def integrand(z):
        h = mu_i + sd_i * z
        return math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * float(np.prod(ndtr((h - mu_o) / sd_o)))

    # breakpoints where distractor CDFs switch on keep the adaptive rule honest
    knees = sorted(z for z in (mu_o - mu_i) / sd_i if -10 < z < 10)
    value, _ = integrate.quad(integrand, -10.0, 10.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL,
                              points=knees or None, limit=500)
    return float(min(max(value, 0.0), 1.0))


@functools.lru_cache(maxsize=8)
def _hermgauss(nodes: int):
    return np.polynomial.hermite.hermgauss(nodes)


def _gh_iid(a: float, b: float, m: int, nodes: int) -> float:
    x, w = _hermgauss(nodes)
    return float(w @ ndtr(a * math.sqrt(2.0) * x + b) ** m / math.sqrt(math.pi))


def predict_iid(stats: MomentStatsReduced, D: int) -> float:
    """Accuracy with D-1 identical independent distractors.

    Integrates over the standardised hit ``z``:
    ``E_z[ Phi((sigma_h z + mu_h - mu_r) / sigma_r)^(D-1) ]``.
    """
    if D < 2:
        raise ParameterError("D must be >= 2")
    scale = max(abs(stats.mu_h), abs(stats.mu_r))
    s_h = _floor(stats.sigma_h, scale)
    s_r = _floor(stats.sigma_r, scale)
    a, b = s_h / s_r, (stats.mu_h - stats.mu_r) / s_r
    if D == 2:
        return float(ndtr(b / math.sqrt(1.0 + a * a)))
    if a <= GH_MAX_RATIO:
        nodes, prev = GH_NODES, _gh_iid(a, b, D - 1, GH_NODES)
        while nodes < GH_MAX_NODES:
            nodes *= 2
            cur = _gh_iid(a, b, D - 1, nodes)
            if abs(cur - prev) <= QUAD_TOL:
                return float(min(max(cur, 0.0), 1.0))
            prev = cur
    return _quad_iid(a, b, D - 1)


def _quad_iid(a: float, b: float, m: int) -> float:
    """Adaptive fallback with breakpoints around the distractor CDF's rise."""
    knees = [z for z in (-b / a, (-b - 6.0) / a, (-b + 6.0) / a) if -12.0 < z < 12.0]
    f = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * ndtr(a * z + b) ** m
    value, _ = integrate.quad(f, -12.0, 12.0, epsabs=QUAD_TOL * 0.1, epsrel=QUAD_TOL,
                              points=sorted(knees) or None, limit=500)
    return float(min(max(value, 0.0), 1.0))


def predict_iid_array(mu_h, sigma_h, mu_r, sigma_r, D: int, nodes: int = GH_MAX_NODES) -> np.ndarray:
    """Vectorised :func:`predict_iid` for arrays of moments (fixed quadrature)."""
    if D < 2:
        raise ParameterError("D must be >= 2")
    mu_h, sigma_h, mu_r, sigma_r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in
                                                         (mu_h, sigma_h, mu_r, sigma_r)))
    scale = np.maximum(np.abs(mu_h), np.abs(mu_r))
    floor = SIGMA_FLOOR * np.maximum(scale, 1.0)
    s_h = np.where(sigma_h > 0, sigma_h, floor)
    s_r = np.where(sigma_r > 0, sigma_r, floor)
    a, b = s_h / s_r, (mu_h - mu_r) / s_r
    if D == 2:
        return ndtr(b / np.sqrt(1.0 + a * a))
    x, w = _hermgauss(nodes)
    vals = ndtr(a[..., None] * math.sqrt(2.0) * x + b[..., None]) ** (D - 1) @ w / math.sqrt(math.pi)
    sharp = a > GH_MAX_RATIO
    if np.any(sharp):
        vals[sharp] = [_quad_iid(ai, bi, D - 1) for ai, bi in zip(a[sharp], b[sharp])]
    return np.clip(vals, 0.0, 1.0)
