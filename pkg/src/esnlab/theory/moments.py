"""Output-neuron statistics: measured from traces or derived from hyperparameters."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import CapabilityError, InsufficientDataError, ParameterError
from ..readout import ReadoutMatrix, ReadoutMethod
from ..reservoir import MatrixKind, StateTrace, Variant
from .capability import capability
from .channel import scalar_channel
from .perceptron import MomentStatsFull, MomentStatsReduced


@dataclass(frozen=True)
class ModelParams:
    """Hyperparameters sufficient for analytic moments (no sampled matrices)."""

    N: int
    variant: Variant
    kind: MatrixKind = MatrixKind.PERMUTATION
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "kind", MatrixKind(self.kind))


def moments_from_scores(H: np.ndarray, labels: np.ndarray, mode: str = "reduced", D: int | None = None):
    """Group score vectors ``H`` (n, D) by true class.

    ``full`` returns per-class means and covariances, ``reduced`` pools the
    hit components and the reject components over all samples.
    """
    H = np.asarray(H, dtype=float)
    labels = np.asarray(labels)
    D = H.shape[1] if D is None else D
    if mode == "reduced":
        hit = np.zeros(H.shape, dtype=bool)
        hit[np.arange(len(H)), labels] = True
        h, r = H[hit], H[~hit]
        if len(h) < 2:
            raise InsufficientDataError("need at least two samples")
        return MomentStatsReduced(float(h.mean()), float(h.std(ddof=1)), float(r.mean()), float(r.std(ddof=1)))
    if mode != "full":
        raise ParameterError(f"mode must be 'full' or 'reduced', got {mode!r}")
    means = np.empty((D, D))
    covs = np.empty((D, D, D))
    for i in range(D):
        Hi = H[labels == i]
        if len(Hi) < 2:
            raise InsufficientDataError(f"class {i} has {len(Hi)} samples; full mode needs >= 2")
        means[i] = Hi.mean(axis=0)
        covs[i] = np.cov(Hi, rowvar=False).reshape(D, D)
    return MomentStatsFull(means, covs)


def measure_moments(trace: StateTrace, readout: ReadoutMatrix, mode: str = "reduced", phase: str = "recall"):
    X, _ = trace.select(phase)
    return moments_from_scores(readout.scores(X), trace.labels(readout.delay, phase), mode, readout.D)


def _require_q3(params, method) -> None:
    kind, variant = MatrixKind(params.kind), Variant(params.variant)
    if ReadoutMethod(method) is not ReadoutMethod.CODEBOOK or not capability(kind, variant, method).q3:
        raise CapabilityError(
            f"no hyperparameter-only prediction for ({kind.value}, {variant.value}, {ReadoutMethod(method).value}); "
            "see the applicability table"
        )


def analytic_moments(params, method=ReadoutMethod.CODEBOOK, d: int | None = None, G: int | None = None,
                     horizon: int | None = None) -> MomentStatsReduced:
    """Hit/reject moments of the codebook readout from hyperparameters only.

    ``params`` needs ``N, variant, kind, alpha, beta, gamma`` (a
    :class:`~esnlab.reservoir.ReservoirSpec` or :class:`ModelParams`).
    V1 uses the stored-sequence length ``G``; the other variants take the
    delay ``d`` of a stationary stream. ``horizon`` truncates the V2 series to
    that many stored inputs.
    """
    _require_q3(params, method)
    N, beta, gamma = params.N, params.beta, params.gamma
    variant = Variant(params.variant)
    if variant is Variant.V1:
        if G is None or G < 1:
            raise ParameterError("V1 moments need the stored-sequence length G >= 1")
        return MomentStatsReduced(float(N), math.sqrt(N * (G - 1)), 0.0, math.sqrt(N * G))
    if d is None or d < 0:
        raise ParameterError("delay d >= 0 required")
    if variant is Variant.V2:
        if horizon is None:
            if gamma >= 1.0:
                raise ParameterError("stationary V2 moments need gamma < 1 (or a finite horizon)")
            total = 1.0 / (1.0 - gamma ** 2)
        else:
            if d >= horizon:
                raise ParameterError("delay must be below the horizon")
            total = float(np.sum(gamma ** (2.0 * np.arange(horizon))))
        signal = gamma ** d
        return MomentStatsReduced(beta * signal * N, beta * math.sqrt(max(N * (total - signal ** 2), 0.0)),
                                  0.0, beta * math.sqrt(N * total))
    if variant in (Variant.V3, Variant.V4) and params.alpha == 1.0:
        ch = scalar_channel(float(beta), float(gamma), int(max(d, 32)))
        return MomentStatsReduced(*ch.hit_reject(N, d))
    raise CapabilityError(
        f"hyperparameter-only moments for {variant.value} are not implemented: leaky units do not decouple "
        "into scalar channels; measure the moments instead"
    )


def analytic_curve(params, D: int, delays, horizon: int | None = None) -> np.ndarray:
    """Predicted accuracy (i.i.d.-distractor tier) at every delay in ``delays``."""
    from .perceptron import predict_iid

    delays = [int(d) for d in delays]
    variant = Variant(params.variant)
    if variant in (Variant.V3, Variant.V4):
        _require_q3(params, ReadoutMethod.CODEBOOK)
        ch = scalar_channel(float(params.beta), float(params.gamma), max(delays))
        return np.array([predict_iid(MomentStatsReduced(*ch.hit_reject(params.N, d)), D) for d in delays])
    return np.array([predict_iid(analytic_moments(params, d=d, horizon=horizon), D) for d in delays])
