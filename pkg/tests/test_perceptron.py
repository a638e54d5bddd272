import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from esnlab.errors import ParameterError
from esnlab.theory.perceptron import (
    MomentStatsFull,
    MomentStatsReduced,
    predict_full,
    predict_independent,
    predict_iid,
    predict_iid_array,
)

moments = st.tuples(st.floats(-5, 5), st.floats(0.05, 5), st.floats(-5, 5), st.floats(0.05, 5))


def _iid_oracle(mu_h, s_h, mu_r, s_r, D):
    f = lambda h: norm.pdf(h, mu_h, s_h) * norm.cdf(h, mu_r, s_r) ** (D - 1)
    lo, hi = mu_h - 12 * s_h, mu_h + 12 * s_h
    knees = sorted(k for k in (mu_r - 8 * s_r, mu_r, mu_r + 8 * s_r) if lo < k < hi)
    return integrate.quad(f, lo, hi, points=knees or None, limit=400, epsabs=1e-11)[0]


@given(m=moments, D=st.integers(2, 40))
@settings(max_examples=60, deadline=None)
def test_iid_matches_direct_integral(m, D):
    assert abs(predict_iid(MomentStatsReduced(*m), D) - _iid_oracle(*m, D)) < 1e-6


@given(mu=st.floats(-10, 10), s=st.floats(0.01, 10), D=st.integers(2, 64))
@settings(max_examples=60, deadline=None)
def test_equal_moments_give_chance(mu, s, D):
    assert abs(predict_iid(MomentStatsReduced(mu, s, mu, s), D) - 1.0 / D) < 1e-6
    assert abs(predict_independent(np.full(D, mu), np.full(D, s), 0) - 1.0 / D) < 1e-6


@given(m=moments, D=st.integers(2, 30), c=st.floats(1e-3, 1e3))
@settings(max_examples=60, deadline=None)
def test_iid_scale_invariance(m, D, c):
    s = MomentStatsReduced(*m)
    assert abs(predict_iid(s.scaled(c), D) - predict_iid(s, D)) < 1e-10


@given(m=moments, D=st.integers(2, 30), shift=st.floats(-100, 100))
@settings(max_examples=40, deadline=None)
def test_iid_shift_invariance(m, D, shift):
    mu_h, s_h, mu_r, s_r = m
    a = predict_iid(MomentStatsReduced(mu_h + shift, s_h, mu_r + shift, s_r), D)
    assert abs(a - predict_iid(MomentStatsReduced(*m), D)) < 1e-7


def test_iid_monotone_in_separation():
    vals = [predict_iid(MomentStatsReduced(mu, 1.0, 0.0, 1.0), 8) for mu in np.linspace(0, 6, 13)]
    assert np.all(np.diff(vals) > 0)


def test_iid_array_matches_scalar(rng):
    mu_h = rng.uniform(-2, 6, 50)
    s_h, s_r = rng.uniform(0.1, 3, 50), rng.uniform(0.1, 3, 50)
    for D in (2, 3, 16):
        arr = predict_iid_array(mu_h, s_h, 0.0, s_r, D)
        ref = [predict_iid(MomentStatsReduced(a, b, 0.0, c), D) for a, b, c in zip(mu_h, s_h, s_r)]
        assert np.max(np.abs(arr - ref)) < 1e-6


def test_zero_spread_is_deterministic():
    assert predict_iid(MomentStatsReduced(1.0, 0.0, 0.0, 0.0), 4) == pytest.approx(1.0)
    assert predict_iid(MomentStatsReduced(-1.0, 0.0, 0.0, 0.0), 4) == pytest.approx(0.0)


def test_independent_reduces_to_iid():
    means, stds = [2.0, 0.5, 0.5, 0.5], [1.5, 0.7, 0.7, 0.7]
    assert predict_independent(means, stds, 0) == pytest.approx(
        predict_iid(MomentStatsReduced(2.0, 1.5, 0.5, 0.7), 4), abs=1e-7)


def test_full_with_diagonal_covariance_reduces_to_independent():
    D = 4
    means = np.array([[2.0, 0.1, -0.3, 0.0], [0.0, 1.5, 0.2, 0.1], [0.3, 0.0, 1.0, 0.0], [0, 0, 0, 2.5]])
    var = np.array([[1.0, 0.5, 2.0, 1.0], [1, 1, 1, 1], [0.5, 0.5, 0.5, 3.0], [2, 1, 1, 1]])
    covs = np.array([np.diag(v) for v in var])
    res = predict_full(MomentStatsFull(means, covs), tol=1e-6)
    ref = [predict_independent(means[i], np.sqrt(var[i]), i) for i in range(D)]
    assert res.converged
    assert np.max(np.abs(res.per_class - ref)) < 1e-5
    assert res.accuracy == pytest.approx(np.mean(ref), abs=1e-5)


def test_full_two_classes_exact():
    means = np.array([[1.0, 0.0], [0.0, 1.0]])
    cov = np.array([[1.0, 0.3], [0.3, 2.0]])
    res = predict_full(MomentStatsFull(means, np.array([cov, cov])))
    assert res.per_class[0] == pytest.approx(norm.cdf(1.0 / math.sqrt(1 + 2 - 0.6)))


def _mc(means, cov, n, rng):
    X = rng.multivariate_normal(means, cov, size=n)
    return np.mean(X[:, 0] > X[:, 1:].max(axis=1))


@pytest.mark.parametrize("seed", range(20))
def test_full_matches_monte_carlo(seed):
    """predict_full against 10^6 Gaussian samples on random D <= 5 instances, within 3 SE."""
    rng = np.random.default_rng(1000 + seed)
    D = int(rng.integers(2, 6))
    means = np.zeros((D, D))
    covs = np.zeros((D, D, D))
    for i in range(D):
        A = rng.standard_normal((D, D))
        covs[i] = A @ A.T / D + 0.2 * np.eye(D)
        means[i] = rng.normal(0, 0.5, D)
        means[i, i] += rng.uniform(0.5, 2.5)
    stats = MomentStatsFull(means, covs)
    res = predict_full(stats, tol=1e-5)
    # MC for class 0 with inputs reordered so the true class is first
    p = _mc(means[0], covs[0], 1_000_000, np.random.default_rng(5000 + seed))
    se = math.sqrt(p * (1 - p) / 1_000_000)
    assert abs(res.per_class[0] - p) <= 3 * se + res.error


def test_reduced_pools_hits_and_rejects():
    means = np.array([[3.0, 1.0], [1.0, 3.0]])
    covs = np.array([np.eye(2), np.eye(2)])
    r = MomentStatsFull(means, covs).reduced()
    assert (r.mu_h, r.sigma_h, r.mu_r, r.sigma_r) == pytest.approx((3.0, 1.0, 1.0, 1.0))


def test_invalid_inputs():
    with pytest.raises(ParameterError):
        MomentStatsReduced(0, -1, 0, 1)
    with pytest.raises(ParameterError):
        predict_iid(MomentStatsReduced(0, 1, 0, 1), 1)
    with pytest.raises(ParameterError):
        MomentStatsFull(np.zeros((2, 3)), np.zeros((2, 2, 2)))
    with pytest.raises(ParameterError):
        MomentStatsFull(np.zeros((2, 2)), np.zeros((2, 2, 2)), np.array([0.7, 0.7]))
