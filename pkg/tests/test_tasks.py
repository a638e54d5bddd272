import numpy as np
import pytest

from esnlab.errors import ConfigError
from esnlab.tasks import (
    CUE,
    DISTRACTOR,
    ExperimentConfig,
    delay_subset,
    five_bit_inputs,
    five_bit_signals,
    five_bit_trial,
    parallel_map,
    predict_five_bit,
    run_fixed_length,
    run_trajectory_association,
)


def small(**kw):
    base = dict(variant="V2", kind="orthogonal", N=64, D=4, gamma=0.8, E=200, M=0, R=400,
                delays=list(range(6)), trials=2)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("kw,key", [
    ({"R": 0}, "R"),
    ({"variant": "V7"}, "variant"),
    ({"variant": "V3", "gamma": 0.9}, "gamma"),
    ({"readout": "cov_fine", "gamma": 1.2}, "gamma"),
    ({"readout": "cov_fine", "variant": "V4", "beta": 0.5}, "readout"),
    ({"readout": "regression"}, "M"),
    ({"delays": [500]}, "delays"),
    ({"alpha": 0.5}, "alpha"),
])
def test_invalid_configs(kw, key):
    with pytest.raises(ConfigError) as info:
        small(**kw).validate()
    assert info.value.key == key


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"N": 10, "bogus": 1})
    cfg = ExperimentConfig.from_dict({"delays": {"start": 2, "stop": 6, "step": 2}})
    assert list(cfg.delays) == [2, 4, 6]


def test_round_trip_dict():
    cfg = small(snr_db=20.0)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_trajectory_run_is_reproducible_and_counts_decisions():
    cfg = small()
    a, b = run_trajectory_association(cfg), run_trajectory_association(cfg)
    assert np.array_equal(a.empirical.accuracy, b.empirical.accuracy)
    assert a.decisions == cfg.trials * cfg.R * len(cfg.delays)
    assert set(a.predicted) >= {"iid"}
    assert a.empirical.accuracy[0] > 0.9


def test_jobs_do_not_change_results():
    cfg = small(trials=3)
    assert np.array_equal(run_trajectory_association(cfg, jobs=1).empirical.accuracy,
                          run_trajectory_association(cfg, jobs=2).empirical.accuracy)


def test_measured_tiers_for_regression():
    r = run_trajectory_association(small(readout="regression", M=1000, theory="measured", variant="V5", alpha=0.9,
                                         beta=0.3, gamma=0.9))
    for tier in ("full", "indep", "iid"):
        assert len(r.predicted[tier]) == 6
    assert np.max(np.abs(r.predicted["full"].accuracy - r.empirical.accuracy)) < 0.1


def test_geometry_recorded():
    r = run_trajectory_association(small(readout="regression", M=1000, geometry=True, theory="none"))
    g = r.geometry[3]
    assert g["etf_target"] == pytest.approx(-1 / 3)
    assert -1 <= g["mean_cosine"] <= 1


def test_fixed_length_single_item_is_perfect():
    cfg = ExperimentConfig(variant="V1", kind="orthogonal", N=64, D=4, G=(1, 8), n_test=50, trials=2)
    r = run_fixed_length(cfg)
    assert r.empirical.accuracy[0] == 1.0
    assert r.predicted["iid"].accuracy[0] == pytest.approx(1.0)


def test_delay_subset():
    assert delay_subset(5, 32) == [0, 1, 2, 3, 4]
    sub = delay_subset(1024, 32)
    assert len(sub) == 32 and sub[0] == 0 and sub[-1] == 1023


def test_parallel_map_keeps_order():
    assert parallel_map(abs, [-3, 1, -2], jobs=2) == [3, 1, 2]


def test_five_bit_layout():
    sig = five_bit_signals()
    assert sig.shape == (32, 5) and len({tuple(s) for s in sig}) == 32
    seq = five_bit_inputs(3)
    assert seq.shape == (32, 9)
    assert np.all(seq[:, 5] == CUE) and np.all(seq[:, 6:] == DISTRACTOR)


def test_five_bit_large_reservoir_succeeds():
    cfg = ExperimentConfig(variant="V4", kind="permutation", N=2048, D=4, beta=2 ** -6, gamma=0.99)
    info, cue = five_bit_trial(5, cfg, 0)
    assert info == 1.0
    assert predict_five_bit(5, cfg) > 0.99
