"""Experiment drivers: trajectory association, fixed-length recall and the 5-bit memory task.

Every trial draws its codebook, matrix, sequences and noise from substreams
keyed by ``(seed, trial, purpose)``, so results do not depend on the number of
workers or the order in which they finish.
"""
from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .analysis import AccuracyCurve, geometry_report, total_information
from .codec import gen_codebook, gen_sequence, substream
from .errors import CapabilityError, ConfigError, EsnLabError, InsufficientDataError, ParameterError
from .readout import (
    Fidelity,
    ReadoutMatrix,
    ReadoutMethod,
    build_covariance_estimate,
    codebook_readouts,
    covariance_readouts,
    fit_regression,
)
from .reservoir import (
    MatrixKind,
    ReservoirSpec,
    StateTrace,
    Variant,
    final_states,
    gen_recurrent,
    run,
)
from .theory.capability import capability
from .theory.moments import ModelParams, analytic_moments, moments_from_scores
from .theory.perceptron import MomentStatsReduced, predict_full, predict_independent, predict_iid

KEY_CODEBOOK, KEY_MATRIX, KEY_SEQUENCE, KEY_NOISE, KEY_TRAIN, KEY_TEST, KEY_WARMUP = range(1, 8)
TIERS = ("full", "indep", "iid")
THEORY_MODES = ("auto", "analytic", "measured", "none")


class SearchBoundError(EsnLabError):
    """Minimal-size search did not reach its target inside the allowed range."""

    def __init__(self, message, bracket):
        self.bracket = bracket
        super().__init__(message)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to repeat one experiment point.

    Streaming runs use the phase lengths ``E, M, R``; fixed-length runs use the
    stored lengths ``G`` with ``n_train`` / ``n_test`` sequences per trial.
    ``theory`` selects where predicted curves come from: ``analytic``
    (hyperparameters), ``measured`` (moments of the recall scores), ``auto``
    (analytic when available, else measured) or ``none``.
    """

    variant: str = "V2"
    kind: str = "permutation"
    N: int = 256
    D: int = 4
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    readout: str = "codebook"
    ridge: float | None = None
    cov_eps: float = 1e-6
    cov_first_lag: int = 0
    cov_horizon: int | None = None
    E: int = 1000
    M: int = 0
    R: int = 3000
    delays: tuple = tuple(range(26))
    G: tuple = ()
    n_train: int = 0
    n_test: int = 128
    max_delays: int = 32
    trials: int = 10
    seed: int = 0
    snr_db: float | None = None
    noise_phases: tuple = ("train",)
    theory: str = "auto"
    geometry: bool = False

    def __post_init__(self):
        object.__setattr__(self, "delays", tuple(int(d) for d in self.delays))
        object.__setattr__(self, "G", tuple(int(g) for g in self.G))
        object.__setattr__(self, "noise_phases", tuple(self.noise_phases))
        for name in ("variant", "kind", "readout"):
            value = getattr(self, name)
            if isinstance(value, (Variant, MatrixKind, ReadoutMethod)):
                object.__setattr__(self, name, value.value)

    # ---------------------------------------------------------------- helpers
    @property
    def method(self) -> ReadoutMethod:
        return ReadoutMethod(self.readout)

    @property
    def fixed_length(self) -> bool:
        return len(self.G) > 0

    def params(self) -> ModelParams:
        return ModelParams(self.N, self.variant, self.kind, self.alpha, self.beta, self.gamma)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for k in ("delays", "G", "noise_phases"):
            out[k] = list(out[k])
        return out

    @classmethod
    def from_dict(cls, data: dict, prefix: str = "") -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in names:
                raise ConfigError("unknown key", prefix + key)
        data = dict(data)
        if isinstance(data.get("delays"), dict):
            spec = data["delays"]
            data["delays"] = range(int(spec.get("start", 0)), int(spec["stop"]) + 1, int(spec.get("step", 1)))
        try:
            cfg = cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), prefix.rstrip(".") or None) from exc
        cfg.validate(prefix)
        return cfg

    def validate(self, prefix: str = "") -> "ExperimentConfig":
        def fail(key, message):
            raise ConfigError(message, prefix + key)

        try:
            variant = Variant(self.variant)
        except ValueError:
            fail("variant", f"unknown variant {self.variant!r}")
        try:
            MatrixKind(self.kind)
        except ValueError:
            fail("kind", f"unknown matrix kind {self.kind!r}")
        try:
            method = ReadoutMethod(self.readout)
        except ValueError:
            fail("readout", f"unknown readout {self.readout!r}")
        if self.N < 1:
            fail("N", "must be >= 1")
        if self.D < 2:
            fail("D", "must be >= 2")
        if self.trials < 1:
            fail("trials", "must be >= 1")
        for name in ("alpha", "beta", "gamma"):
            if name not in variant.free and getattr(self, name) != 1.0:
                fail(name, f"{variant.value} pins {name} to 1")
        if not 0.0 < self.alpha <= 1.0:
            fail("alpha", "must lie in (0, 1]")
        if self.beta < 0 or self.gamma < 0:
            fail("beta" if self.beta < 0 else "gamma", "must be non-negative")
        if self.theory not in THEORY_MODES:
            fail("theory", f"must be one of {THEORY_MODES}")
        if method in (ReadoutMethod.COV_COARSE, ReadoutMethod.COV_FINE):
            if not variant.is_linear:
                fail("readout", "covariance readouts need linear units (V1 or V2)")
            if self.gamma > 1.0:
                fail("gamma", f"covariance series sum_n gamma^2n diverges for gamma={self.gamma} > 1")
            if self.gamma == 1.0 and self.cov_horizon is None and not self.fixed_length:
                fail("cov_horizon", "gamma = 1 needs a finite covariance horizon")
        if self.cov_first_lag not in (0, 1):
            fail("cov_first_lag", "must be 0 or 1")
        if self.snr_db is not None:
            for phase in self.noise_phases:
                if phase not in ("train", "recall"):
                    fail("noise_phases", f"unknown phase {phase!r}")
        if self.fixed_length:
            if min(self.G) < 1:
                fail("G", "stored lengths must be >= 1")
            if self.n_test < 1:
                fail("n_test", "must be >= 1")
            if method is ReadoutMethod.REGRESSION and self.n_train < 1:
                fail("n_train", "regression readout needs training sequences")
            if self.max_delays < 1:
                fail("max_delays", "must be >= 1")
        else:
            if min(self.E, self.M, self.R) < 0:
                fail("E", "phase lengths must be non-negative")
            if self.R == 0:
                fail("R", "no recall states: nothing to score")
            if method is ReadoutMethod.REGRESSION and self.M == 0:
                fail("M", "regression readout needs training states")
            if not self.delays:
                fail("delays", "empty delay list")
            if min(self.delays) < 0:
                fail("delays", "delays must be >= 0")
            if max(self.delays) > self.E + self.M:
                fail("delays", f"max delay {max(self.delays)} reaches before the sequence start")
        return self


@dataclass
class TaskResult:
    config: ExperimentConfig
    empirical: AccuracyCurve
    predicted: dict = field(default_factory=dict)  # tier -> AccuracyCurve
    moments: dict = field(default_factory=dict)  # d -> MomentStatsReduced (trial average)
    geometry: dict = field(default_factory=dict)  # d -> summary dict
    by_delay: dict = field(default_factory=dict)  # G -> AccuracyCurve over delays (fixed-length runs)
    trials: int = 0
    decisions: int = 0
    notes: list = field(default_factory=list)


@dataclass(frozen=True)
class FiveBitResult:
    T: int
    N: int
    success: bool
    accuracy: float
    cue_accuracy: float
    seeds: int


# ------------------------------------------------------------------ building blocks

def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def parallel_map(fn, items, jobs: int | None = 1) -> list:
    """Ordered map, in worker processes when ``jobs > 1``."""
    items = list(items)
    jobs = default_jobs() if jobs is None else int(jobs)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def build_spec(cfg: ExperimentConfig, trial: int) -> ReservoirSpec:
    codebook = gen_codebook(cfg.N, cfg.D, substream(cfg.seed, trial, KEY_CODEBOOK))
    matrix = gen_recurrent(cfg.kind, cfg.N, substream(cfg.seed, trial, KEY_MATRIX))
    return ReservoirSpec(cfg.N, cfg.variant, matrix, codebook, cfg.alpha, cfg.beta, cfg.gamma)


def _covariance(cfg: ExperimentConfig, spec: ReservoirSpec, delays, horizon):
    fidelity = Fidelity.FINE if cfg.method is ReadoutMethod.COV_FINE else Fidelity.COARSE
    est = build_covariance_estimate(spec.codebook, spec.matrix, cfg.gamma, fidelity, cfg.cov_eps,
                                    horizon, cfg.cov_first_lag)
    return covariance_readouts(spec.codebook, spec.matrix, delays, est)


def _stack(readouts: list[ReadoutMatrix]) -> np.ndarray:
    return np.concatenate([r.rows for r in readouts], axis=0).T  # (N, n_delays * D)


def _decide(X: np.ndarray, readouts: list[ReadoutMatrix]):
    """Scores (n, n_delays, D) and WTA decisions (n, n_delays)."""
    D = readouts[0].D
    S = (X @ _stack(readouts)).reshape(len(X), len(readouts), D)
    return S, np.argmax(S, axis=2)


def _add_noise(X: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    power = np.einsum("ij,ij->i", X, X) / X.shape[1]
    sigma = np.sqrt(power / 10.0 ** (snr_db / 10.0))
    return X + sigma[:, None] * rng.standard_normal(X.shape)


def _tier_predictions(S: np.ndarray, labels: np.ndarray, D: int, tiers) -> dict:
    out = {}
    try:
        full = moments_from_scores(S, labels, "full", D)
    except InsufficientDataError:
        return out
    if "full" in tiers:
        out["full"] = predict_full(full).accuracy
    if "indep" in tiers:
        stds = np.sqrt(np.maximum(np.einsum("kii->ki", full.covs), 0.0))
        out["indep"] = float(np.mean([predict_independent(full.means[i], stds[i], i) for i in range(D)]))
    if "iid" in tiers:
        out["iid"] = predict_iid(moments_from_scores(S, labels, "reduced", D), D)
    return out


def _cosine_moments(X: np.ndarray, readout: ReadoutMatrix, labels: np.ndarray):
    U = X / np.maximum(np.linalg.norm(X, axis=1, keepdims=True), 1e-300)
    R = readout.rows / np.linalg.norm(readout.rows, axis=1, keepdims=True)
    return moments_from_scores(U @ R.T, labels, "reduced", readout.D)


def _theory_plan(cfg: ExperimentConfig):
    """Return ``("analytic"|"measured"|None, note)`` for this configuration."""
    if cfg.theory == "none":
        return None, None
    answers = capability(cfg.kind, cfg.variant, cfg.method)
    if cfg.theory in ("auto", "analytic") and answers.q3:
        try:
            _analytic_point(cfg, d=min(cfg.delays) if not cfg.fixed_length else 0,
                            G=max(cfg.G) if cfg.fixed_length else None)
            return "analytic", None
        except (CapabilityError, ParameterError) as exc:
            note = f"analytic prediction unavailable: {exc}"
            if cfg.theory == "analytic":
                return None, note
    elif cfg.theory == "analytic":
        return None, f"analytic prediction unavailable for ({cfg.kind}, {cfg.variant}, {cfg.readout})"
    else:
        note = None
    if answers.q2:
        return "measured", note
    return None, note or f"no prediction for ({cfg.kind}, {cfg.variant}, {cfg.readout})"


def _analytic_point(cfg: ExperimentConfig, d: int, G: int | None = None) -> float:
    params = cfg.params()
    variant = Variant(cfg.variant)
    if cfg.fixed_length:
        if variant is Variant.V1:
            return predict_iid(analytic_moments(params, G=G), cfg.D)
        if variant is Variant.V2:
            return predict_iid(analytic_moments(params, d=d, horizon=G), cfg.D)
        raise CapabilityError("fixed-length predictions cover linear reservoirs only")
    if variant is Variant.V1:
        raise CapabilityError("V1 streams never reach a stationary state")
    return predict_iid(analytic_moments(params, d=d), cfg.D)


# ------------------------------------------------------------------ trajectory association

def _trajectory_trial(cfg: ExperimentConfig, plan, trial: int) -> dict:
    spec = build_spec(cfg, trial)
    seq = gen_sequence(cfg.E, cfg.M, cfg.R, cfg.D, substream(cfg.seed, trial, KEY_SEQUENCE))
    trace = run(seq, spec)
    if cfg.snr_db is not None:
        from .readout import add_noise

        trace = add_noise(trace, cfg.snr_db, substream(cfg.seed, trial, KEY_NOISE), cfg.noise_phases)
    delays = list(cfg.delays)
    method = cfg.method
    if method is ReadoutMethod.CODEBOOK:
        readouts = codebook_readouts(spec.codebook, spec.matrix, delays)
    elif method is ReadoutMethod.REGRESSION:
        X, _ = trace.select("train")
        readouts = fit_regression(X, {d: trace.labels(d, "train") for d in delays}, cfg.D, cfg.ridge)
    else:
        readouts = _covariance(cfg, spec, delays, cfg.cov_horizon)
    return _score_trial(cfg, plan, trace, readouts)


def _score_trial(cfg: ExperimentConfig, plan, trace: StateTrace, readouts) -> dict:
    X, _ = trace.select("recall")
    S, pred = _decide(X, readouts)
    labels = np.stack([trace.labels(r.delay, "recall") for r in readouts], axis=1)
    out = {"correct": (pred == labels).sum(axis=0), "n": len(X), "moments": [], "tiers": [], "geometry": []}
    for k, r in enumerate(readouts):
        out["moments"].append(moments_from_scores(S[:, k], labels[:, k], "reduced", cfg.D))
        if plan == "measured":
            out["tiers"].append(_tier_predictions(S[:, k], labels[:, k], cfg.D, TIERS))
        if cfg.geometry:
            g = geometry_report(r)
            cm = _cosine_moments(X, r, labels[:, k])
            out["geometry"].append({"mean_cosine": g.cosine_mean, "etf_target": g.etf_target,
                                    "etf_deviation": g.etf_deviation, "norm_mean": g.norm_mean,
                                    "mu_h_minus_mu_r_cosine": cm.mu_h - cm.mu_r, "sigma_h": cm.sigma_h})
    return out


def _mean_moments(items) -> MomentStatsReduced:
    arr = np.array([[m.mu_h, m.sigma_h, m.mu_r, m.sigma_r] for m in items])
    return MomentStatsReduced(*(float(v) for v in arr.mean(axis=0)))


def _reduce(cfg: ExperimentConfig, plan, note, xs, parts: list[dict], source_x: str = "d") -> TaskResult:
    correct = np.sum([p["correct"] for p in parts], axis=0)
    n = sum(p["n"] for p in parts)
    acc = correct / n
    stderr = np.sqrt(acc * (1 - acc) / n)
    result = TaskResult(cfg, AccuracyCurve(xs, acc, "empirical", stderr), trials=len(parts),
                        decisions=int(n * len(xs)))
    if note:
        result.notes.append(note)
    for k, x in enumerate(xs):
        result.moments[x] = _mean_moments([p["moments"][k] for p in parts])
        if cfg.geometry:
            keys = parts[0]["geometry"][k].keys()
            result.geometry[x] = {key: float(np.mean([p["geometry"][k][key] for p in parts])) for key in keys}
    if plan == "measured":
        for tier in TIERS:
            vals = [[p["tiers"][k].get(tier, np.nan) for p in parts] for k in range(len(xs))]
            vals = np.array(vals, dtype=float)
            if np.all(np.isfinite(vals)):
                result.predicted[tier] = AccuracyCurve(xs, np.clip(vals.mean(axis=1), 0, 1), f"theory-{tier}")
    return result


def run_trajectory_association(cfg: ExperimentConfig, jobs: int | None = 1) -> TaskResult:
    """Streaming recall: decode every recall state at every configured delay."""
    cfg.validate()
    if cfg.fixed_length:
        raise ConfigError("fixed-length configuration passed to the streaming driver", "G")
    plan, note = _theory_plan(cfg)
    parts = parallel_map(partial(_trajectory_trial, cfg, plan), range(cfg.trials), jobs)
    result = _reduce(cfg, plan, note, list(cfg.delays), parts)
    if plan == "analytic":
        result.predicted["iid"] = AccuracyCurve(list(cfg.delays),
                                                [_analytic_point(cfg, d) for d in cfg.delays], "theory-iid")
    return result


# ------------------------------------------------------------------ fixed length

def delay_subset(G: int, max_delays: int) -> list[int]:
    """All delays of a length-G sequence, or ``max_delays`` evenly spaced ones."""
    if G <= max_delays:
        return list(range(G))
    return [int(d) for d in np.unique(np.round(np.linspace(0, G - 1, max_delays)).astype(int))]


def _fixed_trial(cfg: ExperimentConfig, trial: int) -> dict:
    spec = build_spec(cfg, trial)
    Gmax = max(cfg.G)
    test = substream(cfg.seed, trial, KEY_TEST).integers(0, cfg.D, size=(cfg.n_test, Gmax))
    finals = final_states(test, spec, lengths=cfg.G)
    noise = substream(cfg.seed, trial, KEY_NOISE)
    method = cfg.method
    if method is ReadoutMethod.REGRESSION:
        train = substream(cfg.seed, trial, KEY_TRAIN).integers(0, cfg.D, size=(cfg.n_train, Gmax))
        train_finals = final_states(train, spec, lengths=cfg.G)
    all_delays = sorted({d for G in cfg.G for d in delay_subset(G, cfg.max_delays)})
    if method is ReadoutMethod.CODEBOOK:
        cb = dict(zip(all_delays, codebook_readouts(spec.codebook, spec.matrix, all_delays)))
    out = {}
    for G in cfg.G:
        delays = delay_subset(G, cfg.max_delays)
        X = finals[G]
        if cfg.snr_db is not None and "recall" in cfg.noise_phases:
            X = _add_noise(X, cfg.snr_db, noise)
        if method is ReadoutMethod.CODEBOOK:
            readouts = [cb[d] for d in delays]
        elif method is ReadoutMethod.REGRESSION:
            Xt = train_finals[G]
            if cfg.snr_db is not None and "train" in cfg.noise_phases:
                Xt = _add_noise(Xt, cfg.snr_db, noise)
            readouts = fit_regression(Xt, {d: train[:, G - 1 - d] for d in delays}, cfg.D, cfg.ridge)
        else:
            readouts = _covariance(cfg, spec, delays, cfg.cov_horizon or G)
        _, pred = _decide(X, readouts)
        labels = np.stack([test[:, G - 1 - d] for d in delays], axis=1)
        out[G] = (delays, (pred == labels).sum(axis=0))
    return out


def run_fixed_length(cfg: ExperimentConfig, jobs: int | None = 1) -> TaskResult:
    """Many sequences of fixed length G; only the final state x(G) is scored.

    The accuracy at G pools every scored delay (all of them, or
    ``max_delays`` evenly spaced ones for long sequences). ``by_delay`` keeps
    the per-delay breakdown.
    """
    cfg.validate()
    if not cfg.fixed_length:
        raise ConfigError("fixed-length driver needs stored lengths", "G")
    parts = parallel_map(partial(_fixed_trial, cfg), range(cfg.trials), jobs)
    Gs = list(cfg.G)
    acc, err, decisions = [], [], 0
    result = TaskResult(cfg, None, trials=cfg.trials)
    for G in Gs:
        delays = parts[0][G][0]
        correct = np.sum([p[G][1] for p in parts], axis=0)
        n = cfg.trials * cfg.n_test
        per_delay = correct / n
        result.by_delay[G] = AccuracyCurve(delays, per_delay, "empirical", np.sqrt(per_delay * (1 - per_delay) / n))
        pooled = correct.sum() / (n * len(delays))
        acc.append(pooled)
        err.append(math.sqrt(pooled * (1 - pooled) / (n * len(delays))))
        decisions += n * len(delays)
    result.empirical = AccuracyCurve(Gs, acc, "empirical", err)
    result.decisions = decisions
    if cfg.theory != "none" and cfg.method is ReadoutMethod.CODEBOOK:
        try:
            pred = [float(np.mean([_analytic_point(cfg, d, G) for d in delay_subset(G, cfg.max_delays)]))
                    for G in Gs]
            result.predicted["iid"] = AccuracyCurve(Gs, pred, "theory-iid")
        except (CapabilityError, ParameterError) as exc:
            result.notes.append(f"analytic prediction unavailable: {exc}")
    return result


# ------------------------------------------------------------------ 5-bit memory task

INFO0, INFO1, DISTRACTOR, CUE = 0, 1, 2, 3
SIGNAL_LENGTH = 5
FIVE_BIT_WARMUP = 500


def five_bit_signals() -> np.ndarray:
    """All 32 binary signals as rows of info-symbol indices."""
    bits = (np.arange(2 ** SIGNAL_LENGTH)[:, None] >> np.arange(SIGNAL_LENGTH - 1, -1, -1)) & 1
    return np.where(bits == 1, INFO1, INFO0)


def five_bit_inputs(T: int) -> np.ndarray:
    """Signal, cue, then ``T`` distractors; one row per signal."""
    sig = five_bit_signals()
    tail = np.array([CUE] + [DISTRACTOR] * T)
    return np.concatenate([sig, np.broadcast_to(tail, (len(sig), len(tail)))], axis=1)


def five_bit_trial(T: int, cfg: ExperimentConfig, trial: int, warmup: int = FIVE_BIT_WARMUP):
    """(info accuracy, cue accuracy) for one network on all 32 signals.

    A random warm-up of ``warmup`` symbols brings the reservoir to its
    stationary regime before the signals branch off a shared state. Readouts
    at delay ``T`` recover the cue and at ``T+1 .. T+5`` the signal symbols.
    """
    spec = build_spec(cfg, trial)
    x0 = np.zeros(cfg.N)
    if warmup:
        warm = substream(cfg.seed, trial, KEY_WARMUP).integers(0, cfg.D, size=(1, warmup))
        x0 = final_states(warm, spec)[warmup][0]
    inputs = five_bit_inputs(T)
    X = final_states(inputs, spec, x0=x0)[inputs.shape[1]]
    delays = list(range(T, T + SIGNAL_LENGTH + 1))
    _, pred = _decide(X, codebook_readouts(spec.codebook, spec.matrix, delays))
    last = inputs.shape[1] - 1
    labels = np.stack([inputs[:, last - d] for d in delays], axis=1)
    hits = pred == labels
    return float(hits[:, 1:].mean()), float(hits[:, 0].mean())


def _five_bit_config(cfg: ExperimentConfig, N: int | None = None) -> ExperimentConfig:
    if cfg.D != 4:
        raise ConfigError("the 5-bit task uses D = 4 (two info symbols, distractor, cue)", "D")
    return cfg if N is None else cfg.replace(N=int(N))


def run_five_bit(T: int, cfg: ExperimentConfig, target: float = 0.99, seeds: int | None = None,
                 jobs: int | None = 1, warmup: int = FIVE_BIT_WARMUP) -> FiveBitResult:
    """Mean 5-bit retrieval accuracy over ``seeds`` networks; success when it meets ``target``.

    Success counts the five information symbols; the cue is reported separately.
    """
    if T < 0:
        raise ParameterError("distractor period T must be >= 0")
    cfg = _five_bit_config(cfg)
    seeds = cfg.trials if seeds is None else int(seeds)
    res = parallel_map(partial(_five_bit_seed, T, cfg, warmup), range(seeds), jobs)
    info = float(np.mean([r[0] for r in res]))
    cue = float(np.mean([r[1] for r in res]))
    return FiveBitResult(T, cfg.N, info >= target, info, cue, seeds)


def _five_bit_seed(T, cfg, warmup, trial):
    return five_bit_trial(T, cfg, trial, warmup)


def predict_five_bit(T: int, cfg: ExperimentConfig) -> float:
    """Predicted mean accuracy on the five information symbols."""
    cfg = _five_bit_config(cfg)
    params = cfg.params()
    return float(np.mean([predict_iid(analytic_moments(params, d=T + j), cfg.D)
                          for j in range(1, SIGNAL_LENGTH + 1)]))


def min_reservoir_search(T: int, cfg: ExperimentConfig, target: float = 0.99, mode: str = "theory",
                         seeds: int = 50, n_min: int = 1, n_max: int = 2 ** 16, jobs: int | None = 1,
                         warmup: int = FIVE_BIT_WARMUP) -> int:
    """Smallest N whose 5-bit accuracy meets ``target``.

    Doubles N from ``n_min`` until the target is met, then bisects the last
    bracket. Empirical mode averages over ``seeds`` networks per N.
    """
    cfg = _five_bit_config(cfg)
    if mode == "theory":
        if not capability(cfg.kind, cfg.variant, ReadoutMethod.CODEBOOK).q3:
            raise CapabilityError(f"no hyperparameter-only prediction for ({cfg.kind}, {cfg.variant})")

        def ok(N):
            return predict_five_bit(T, cfg.replace(N=N)) >= target
    elif mode == "empirical":
        def ok(N):
            return run_five_bit(T, cfg.replace(N=N), target, seeds, jobs, warmup).success
    else:
        raise ParameterError(f"mode must be 'theory' or 'empirical', got {mode!r}")
    if n_min < 1 or n_max < n_min:
        raise ParameterError("need 1 <= n_min <= n_max")
    if ok(n_min):
        return n_min
    lo, hi = n_min, n_min
    while True:
        lo, hi = hi, min(2 * hi, n_max)
        if ok(hi):
            break
        if hi == n_max:
            raise SearchBoundError(f"target {target} not reached for N <= {n_max} (T={T}, {mode})", (lo, hi))
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ------------------------------------------------------------------ empirical capacity

def _cell_seed(seed: int, cell: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(cell)]).generate_state(1, np.uint64)[0] >> 1)


def _capacity_cell(template: ExperimentConfig, D, dmax, floor, run_len, args):
    cell, beta, gamma = args
    if beta == 0.0:
        return 0.0, False
    cfg = template.replace(D=D, beta=float(beta), gamma=float(gamma), delays=tuple(range(dmax + 1)),
                           theory="none", geometry=False, seed=_cell_seed(template.seed, cell))
    res = run_trajectory_association(cfg, jobs=1)
    tot = total_information(res.empirical, D, floor, run_len)
    return tot.bits, tot.incomplete


def empirical_capacity_cells(template, betas, gammas, *, D, dmax, floor, run, trials, seed, length, jobs):
    """Simulated total information for each (beta, gamma) cell."""
    if not isinstance(template, ExperimentConfig):
        template = ExperimentConfig(variant=template.variant, kind=template.kind, N=template.N, D=D,
                                    alpha=template.alpha)
    template = template.replace(trials=trials, seed=seed, R=length, E=max(template.E, dmax))
    cells = list(zip(range(len(betas)), np.asarray(betas, float), np.asarray(gammas, float)))
    res = parallel_map(partial(_capacity_cell, template, D, dmax, floor, run), cells, jobs)
    return np.array([r[0] for r in res]), np.array([r[1] for r in res])
