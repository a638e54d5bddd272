import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esnlab.codec import gen_codebook, gen_sequence
from esnlab.errors import ParameterError
from esnlab.reservoir import (
    CycleAliasingWarning,
    MatrixKind,
    ReservoirSpec,
    ReservoirState,
    Variant,
    _min_cycle,
    advance,
    final_states,
    gen_recurrent,
    memory_horizon,
    run,
    step,
)


@given(N=st.integers(1, 48), seed=st.integers(0, 10**6), kind=st.sampled_from(list(MatrixKind)))
@settings(max_examples=40, deadline=None)
def test_recurrent_matrix_is_orthogonal(N, seed, kind):
    W = gen_recurrent(kind, N, seed).todense()
    assert np.max(np.abs(W @ W.T - np.eye(N))) < 1e-9


@given(N=st.integers(2, 40), seed=st.integers(0, 10**6), e=st.integers(-70, 70),
       kind=st.sampled_from(list(MatrixKind)))
@settings(max_examples=60, deadline=None)
def test_powers_preserve_norm_and_match_dense(N, seed, e, kind):
    m = gen_recurrent(kind, N, seed)
    v = np.random.default_rng(seed).standard_normal(N)
    out = m.apply(v, e)
    assert abs(np.linalg.norm(out) - np.linalg.norm(v)) < 1e-9 * max(1.0, np.linalg.norm(v))
    ref = np.linalg.matrix_power(m.todense(), abs(e))
    ref = ref if e >= 0 else ref.T
    assert np.allclose(out, ref @ v, atol=1e-9)
    assert np.allclose(m.apply(m.apply(v, e), -e), v, atol=1e-9)


def test_orbit_and_apply_rows(make_spec):
    m = gen_recurrent("orthogonal", 16, 3)
    V = np.random.default_rng(0).standard_normal((16, 3))
    orb = m.orbit(V, 5, start=2)
    for k in range(4):
        assert np.allclose(orb[k], m.apply(V, k + 2))
    X = V.T
    assert np.allclose(m.apply_rows(X, 3), m.apply(V, 3).T)


def test_haar_sign_fix_gives_unbiased_diagonal():
    diag = np.mean([np.trace(gen_recurrent("orthogonal", 8, s).dense) for s in range(400)])
    assert abs(diag) < 0.3


def test_min_cycle():
    assert _min_cycle(np.array([1, 2, 0, 4, 3])) == 2
    assert _min_cycle(np.array([0, 1])) == 1
    m = gen_recurrent("permutation", 50, 1)
    assert m.min_cycle == _min_cycle(m.perm)


@pytest.mark.parametrize("variant,params", [
    ("V1", {"gamma": 0.9}), ("V3", {"gamma": 0.5}), ("V2", {"alpha": 0.5}), ("V4", {"alpha": 0.9}),
])
def test_pinned_parameters_rejected(make_spec, variant, params):
    with pytest.raises(ParameterError):
        make_spec(variant=variant, **params)


@pytest.mark.parametrize("params", [{"alpha": 0.0}, {"alpha": 1.5}, {"beta": -1.0}, {"gamma": -0.1}])
def test_out_of_range_parameters(make_spec, params):
    with pytest.raises(ParameterError):
        make_spec(variant="V5", **params)


def _trace(spec, seed=0, n=60):
    return run(gen_sequence(0, 0, n, spec.D, seed), spec, retain=("recall",)).states


@given(beta=st.floats(0.01, 2.0), gamma=st.floats(0.1, 1.5), seed=st.integers(0, 1000),
       kind=st.sampled_from(list(MatrixKind)))
@settings(max_examples=30, deadline=None)
def test_variant_degeneracies(beta, gamma, seed, kind):
    N, D = 24, 3
    W, Phi = gen_recurrent(kind, N, seed), gen_codebook(N, D, seed + 1)
    seq = gen_sequence(0, 0, 40, D, seed + 2)

    def states(variant, **p):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CycleAliasingWarning)
            return run(seq, ReservoirSpec(N, variant, W, Phi, **p), retain=("recall",)).states

    assert np.array_equal(states("V5", alpha=1.0, beta=beta, gamma=gamma), states("V4", beta=beta, gamma=gamma))
    assert np.array_equal(states("V4", beta=beta), states("V3", beta=beta))
    assert np.array_equal(states("V2"), states("V1"))
    assert np.allclose(states("V2", beta=beta, gamma=gamma) / beta, states("V2", gamma=gamma), atol=1e-9)


def test_linear_superposition(make_spec):
    spec = make_spec(N=32, D=4, variant="V2", kind="orthogonal", beta=0.7, gamma=0.8)
    seq = gen_sequence(0, 0, 30, 4, 9)
    x = run(seq, spec, retain=("recall",)).states[-1]
    W, Phi = spec.matrix.todense(), spec.codebook.entries
    ref = sum(0.7 * 0.8 ** k * np.linalg.matrix_power(W, k) @ Phi[:, seq.symbols[29 - k]] for k in range(30))
    assert np.allclose(x, ref, atol=1e-10)


def test_tanh_states_bounded(make_spec):
    spec = make_spec(variant="V5", alpha=0.5, beta=3.0, gamma=1.4, kind="orthogonal")
    assert np.max(np.abs(_trace(spec))) <= 1.0


def test_step_matches_run(make_spec):
    spec = make_spec(variant="V4", beta=0.3, gamma=0.9, kind="orthogonal")
    seq = gen_sequence(0, 0, 10, spec.D, 4)
    s = ReservoirState(np.zeros(spec.N))
    for sym in seq.symbols:
        s = step(s, int(sym), spec)
    assert s.n == 10
    assert np.array_equal(s.x, run(seq, spec).states[-1])
    with pytest.raises(ParameterError):
        step(s, spec.D, spec)
    with pytest.raises(ParameterError):
        step(ReservoirState(np.zeros(3)), 0, spec)


def test_trace_phases_and_labels(make_spec):
    spec = make_spec(kind="orthogonal")
    seq = gen_sequence(5, 7, 9, spec.D, 2)
    tr = run(seq, spec)
    assert len(tr) == 16
    X, steps = tr.select("recall")
    assert len(X) == 9 and steps[0] == 13
    assert np.array_equal(tr.labels(3, "recall"), seq.symbols[steps - 1 - 3])
    with pytest.raises(ParameterError):
        tr.labels(12, "train")
    with pytest.raises(ParameterError):
        tr.phase_mask("test")


def test_final_states_match_run(make_spec):
    for kind, variant, p in [("permutation", "V4", {"beta": 0.4, "gamma": 0.95}),
                             ("orthogonal", "V2", {"beta": 0.5, "gamma": 0.9}),
                             ("orthogonal", "V1", {})]:
        spec = make_spec(N=20, D=3, variant=variant, kind=kind, **p)
        S = np.random.default_rng(1).integers(0, 3, size=(6, 15))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CycleAliasingWarning)
            out = final_states(S, spec, lengths=[4, 15])
            for b in range(6):
                X = np.zeros(20)
                for t in range(15):
                    X = advance(X, S[b, t], spec)
                    if t + 1 == 4:
                        assert np.allclose(out[4][b], X, atol=1e-12)
                assert np.allclose(out[15][b], X, atol=1e-12)


def test_cycle_warning(make_spec):
    spec = make_spec(N=64, kind="permutation", seed=2)
    with pytest.warns(CycleAliasingWarning):
        run(gen_sequence(0, 0, 200, spec.D, 0), spec)


def test_memory_horizon(make_spec):
    assert memory_horizon(make_spec(variant="V2", gamma=0.5), 1000) == 10
    assert memory_horizon(make_spec(variant="V1"), 77) == 77


def test_variant_flags():
    assert Variant.V2.is_linear and not Variant.V3.is_linear
    assert Variant.V5.free == {"alpha", "beta", "gamma"}
