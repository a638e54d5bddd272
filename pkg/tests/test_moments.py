import math

import numpy as np
import pytest

from esnlab.codec import gen_codebook, substream
from esnlab.errors import CapabilityError, InsufficientDataError, ParameterError
from esnlab.readout import ReadoutMethod, codebook_readouts
from esnlab.reservoir import ReservoirSpec, final_states, gen_recurrent
from esnlab.theory.moments import (
    ModelParams,
    analytic_curve,
    analytic_moments,
    measure_moments,
    moments_from_scores,
)
from esnlab.theory.perceptron import MomentStatsFull, MomentStatsReduced


def _brute_force(variant, N, D, G, d, beta=1.0, gamma=1.0, draws=200, per_draw=50):
    """Codebook scores of final states, pooled over fresh codebooks, matrices and sequences."""
    H, labels = [], []
    for k in range(draws):
        spec = ReservoirSpec(N, variant, gen_recurrent("orthogonal", N, substream(k, 1)), gen_codebook(N, D, substream(k, 2)),
                             beta=beta, gamma=gamma)
        S = substream(k, 3).integers(0, D, size=(per_draw, G))
        X = final_states(S, spec)[G]
        (r,) = codebook_readouts(spec.codebook, spec.matrix, [d])
        H.append(r.scores(X))
        labels.append(S[:, G - 1 - d])
    return moments_from_scores(np.concatenate(H), np.concatenate(labels))


def test_v1_moments_match_superposition():
    N, D, G = 128, 4, 20
    emp = _brute_force("V1", N, D, G, 5)
    ana = analytic_moments(ModelParams(N, "V1"), G=G)
    assert emp.mu_h == pytest.approx(ana.mu_h, rel=0.03)
    assert emp.sigma_h == pytest.approx(ana.sigma_h, rel=0.05)
    assert emp.mu_r == pytest.approx(ana.mu_r, abs=0.1 * ana.sigma_r)
    assert emp.sigma_r == pytest.approx(ana.sigma_r, rel=0.05)


def test_v2_finite_horizon_matches_superposition():
    N, D, G, beta, gamma = 128, 4, 30, 0.5, 0.9
    emp = _brute_force("V2", N, D, G, 3, beta, gamma)
    ana = analytic_moments(ModelParams(N, "V2", beta=beta, gamma=gamma), d=3, horizon=G)
    assert emp.mu_h == pytest.approx(ana.mu_h, rel=0.03)
    assert emp.sigma_h == pytest.approx(ana.sigma_h, rel=0.05)
    assert emp.sigma_r == pytest.approx(ana.sigma_r, rel=0.05)


def test_v2_stationary_is_horizon_limit():
    p = ModelParams(256, "V2", beta=0.3, gamma=0.8)
    a, b = analytic_moments(p, d=2), analytic_moments(p, d=2, horizon=400)
    assert (a.mu_h, a.sigma_h, a.sigma_r) == pytest.approx((b.mu_h, b.sigma_h, b.sigma_r))


def test_v1_closed_form():
    m = analytic_moments(ModelParams(256, "V1"), G=5)
    assert (m.mu_h, m.sigma_h, m.mu_r, m.sigma_r) == pytest.approx((256, math.sqrt(256 * 4), 0, math.sqrt(256 * 5)))


def test_v3_uses_scalar_channel():
    m = analytic_moments(ModelParams(100, "V3", beta=0.25), d=2)
    assert m.mu_h > 0 and m.mu_r == 0.0
    assert analytic_curve(ModelParams(100, "V3", beta=0.25), 4, [0, 5, 50])[2] < 0.3


@pytest.mark.parametrize("params,kw,err", [
    (ModelParams(64, "V4", "orthogonal", beta=0.5), {"d": 1}, CapabilityError),
    (ModelParams(64, "V5", alpha=0.5, beta=0.5), {"d": 1}, CapabilityError),
    (ModelParams(64, "V2", gamma=1.0), {"d": 1}, ParameterError),
    (ModelParams(64, "V1"), {}, ParameterError),
])
def test_unavailable_moments(params, kw, err):
    with pytest.raises(err):
        analytic_moments(params, **kw)


def test_regression_has_no_analytic_moments():
    with pytest.raises(CapabilityError):
        analytic_moments(ModelParams(64, "V2", gamma=0.5), ReadoutMethod.REGRESSION, d=1)


def test_moments_from_scores_modes(rng):
    H = rng.standard_normal((400, 3))
    labels = rng.integers(0, 3, 400)
    H[np.arange(400), labels] += 2.0
    red = moments_from_scores(H, labels)
    assert isinstance(red, MomentStatsReduced) and red.mu_h == pytest.approx(2.0, abs=0.2)
    full = moments_from_scores(H, labels, "full")
    assert isinstance(full, MomentStatsFull)
    assert np.allclose(np.diag(full.means), 2.0, atol=0.3)
    with pytest.raises(InsufficientDataError):
        moments_from_scores(H[:1], labels[:1])
    with pytest.raises(ParameterError):
        moments_from_scores(H, labels, "other")


def test_measure_moments_uses_phase():
    from esnlab.codec import gen_sequence
    from esnlab.reservoir import run

    spec = ReservoirSpec(64, "V2", gen_recurrent("orthogonal", 64, 0), gen_codebook(64, 2, 1), gamma=0.8)
    trace = run(gen_sequence(20, 0, 500, 2, 2), spec)
    (r,) = codebook_readouts(spec.codebook, spec.matrix, [1])
    m = measure_moments(trace, r)
    ana = analytic_moments(ModelParams(64, "V2", gamma=0.8), d=1)
    assert m.mu_h == pytest.approx(ana.mu_h, rel=0.1)
