import numpy as np
import pytest

from esnlab.codec import gen_codebook, gen_sequence
from esnlab.reservoir import ReservoirSpec, gen_recurrent, run
from esnlab.theory.channel import channel_batch, scalar_channel, scalar_channel_mc


@pytest.mark.parametrize("beta,gamma", [(0.25, 0.9), (0.5, 0.7), (0.125, 0.99), (0.3, 1.2)])
def test_density_matches_monte_carlo(beta, gamma):
    ch = scalar_channel(beta, gamma, 20)
    mc = scalar_channel_mc(beta, gamma, 20, steps=2_000_000, seed=1)
    assert ch.power == pytest.approx(mc.power, rel=0.02)
    assert np.max(np.abs(ch.overlap - mc.overlap)) < 0.01 * max(1.0, ch.overlap[0] / 0.1)


def test_zero_beta_is_silent():
    ch = scalar_channel(0.0, 0.9, 5)
    assert ch.power == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(ch.overlap, 0.0)


def test_first_overlap_small_beta_linear_limit():
    # tanh is nearly linear for small inputs: m_d ~ beta gamma^d, power ~ beta^2/(1-gamma^2)
    beta, gamma = 0.01, 0.8
    ch = scalar_channel(beta, gamma, 6)
    assert np.allclose(ch.overlap, beta * gamma ** np.arange(7), rtol=2e-3)
    assert ch.power == pytest.approx(beta ** 2 / (1 - gamma ** 2), rel=2e-3)


def test_batch_matches_single():
    o, p = channel_batch([0.2, 0.4], [0.9, 1.1], 10)
    for k, (b, g) in enumerate([(0.2, 0.9), (0.4, 1.1)]):
        ch = scalar_channel(b, g, 10)
        assert np.allclose(o[k], ch.overlap) and p[k] == pytest.approx(ch.power)


def test_grid_refinement_is_stable():
    a = scalar_channel(0.25, 0.95, 30, grid=1001)
    b = scalar_channel(0.25, 0.95, 30, grid=2001)
    assert np.max(np.abs(a.overlap - b.overlap)) < 1e-4


def test_channel_describes_permutation_reservoir():
    # oracle: measured per-unit statistics of a simulated V4 permutation reservoir
    N, D, beta, gamma = 512, 2, 0.3, 0.9
    spec = ReservoirSpec(N, "V4", gen_recurrent("permutation", N, 0), gen_codebook(N, D, 1), beta=beta, gamma=gamma)
    with pytest.warns(Warning):
        trace = run(gen_sequence(200, 0, 4000, D, 2), spec, retain=("recall",))
    X = trace.states
    ch = scalar_channel(beta, gamma, 5)
    assert np.mean(X ** 2) == pytest.approx(ch.power, rel=0.03)
