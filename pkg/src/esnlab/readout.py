"""Readout matrices: codebook, ridge regression and covariance-whitened codebook.

A readout for delay ``d`` is a D x N matrix; decoding takes the argmax of its
row inner products with the reservoir state (lowest index wins ties).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .codec import Codebook, substream
from .errors import NumericalError, ParameterError
from .reservoir import RecurrentMatrix, StateTrace

JITTER = 1e-10
RIDGE_SCALE = 1e-6


class ReadoutMethod(str, enum.Enum):
    CODEBOOK = "codebook"
    REGRESSION = "regression"
    COV_COARSE = "cov_coarse"
    COV_FINE = "cov_fine"


class Fidelity(str, enum.Enum):
    COARSE = "coarse"
    FINE = "fine"


@dataclass(frozen=True)
class ReadoutMatrix:
    rows: np.ndarray
    delay: int
    method: ReadoutMethod

    def __post_init__(self):
        if not np.all(np.isfinite(self.rows)):
            raise NumericalError(f"non-finite entries in {self.method.value} readout for d={self.delay}")

    @property
    def D(self) -> int:
        return self.rows.shape[0]

    def scores(self, X: np.ndarray) -> np.ndarray:
        """Output-neuron inputs ``h``: shape (D,) for one state, (B, D) for row states."""
        return X @ self.rows.T


def decode(readout: ReadoutMatrix, x: np.ndarray) -> int:
    x = getattr(x, "x", x)
    if x.shape[-1] != readout.rows.shape[1]:
        raise ParameterError("state and readout dimensions disagree")
    return int(np.argmax(readout.scores(x)))


def decode_batch(readout: ReadoutMatrix, X: np.ndarray) -> np.ndarray:
    return np.argmax(readout.scores(X), axis=1)


def build_codebook_readout(codebook: Codebook, matrix: RecurrentMatrix, d: int) -> ReadoutMatrix:
    return ReadoutMatrix(matrix.apply(codebook.entries, d).T.copy(), d, ReadoutMethod.CODEBOOK)


def codebook_readouts(codebook: Codebook, matrix: RecurrentMatrix, delays) -> list[ReadoutMatrix]:
    delays = [int(d) for d in delays]
    orbit = matrix.orbit(codebook.entries, max(delays))
    return [ReadoutMatrix(orbit[d].T.copy(), d, ReadoutMethod.CODEBOOK) for d in delays]


# ---------------------------------------------------------------- regression

def default_ridge(X: np.ndarray) -> float:
    return RIDGE_SCALE * float(np.mean(np.einsum("ij,ij->j", X, X)))


def fit_regression(X: np.ndarray, targets: dict, D: int, lam: float | None = None) -> list[ReadoutMatrix]:
    """Ridge readouts ``Y^T X (X^T X + lam I)^-1`` sharing one factorisation.

    ``targets`` maps each delay to the integer labels of the rows of ``X``.
    """
    if len(X) < 1:
        raise ParameterError("regression needs at least one training state")
    lam = default_ridge(X) if lam is None else float(lam)
    G = X.T @ X
    G[np.diag_indices_from(G)] += lam
    try:
        factor = linalg.cho_factor(G, lower=True, check_finite=False)
        if lam == 0.0 and np.min(np.abs(np.diag(factor[0]))) < 1e-12 * math.sqrt(np.max(np.diag(G))):
            raise linalg.LinAlgError("numerically singular")
    except linalg.LinAlgError as exc:
        raise NumericalError(f"X^T X + lam I is singular (lam={lam}); use lam > 0") from exc
    out = []
    for d, labels in targets.items():
        XtY = np.zeros((X.shape[1], D))
        np.add.at(XtY.T, labels, X)
        out.append(ReadoutMatrix(linalg.cho_solve(factor, XtY, check_finite=False).T, int(d), ReadoutMethod.REGRESSION))
    return out


def build_regression_readouts(trace: StateTrace, delays, lam: float | None = None) -> list[ReadoutMatrix]:
    X, _ = trace.select("train")
    targets = {int(d): trace.labels(int(d), "train") for d in delays}
    return fit_regression(X, targets, trace.sequence.D, lam)


def build_regression_readout(trace: StateTrace, d: int, lam: float | None = None) -> ReadoutMatrix:
    return build_regression_readouts(trace, [d], lam)[0]


# ---------------------------------------------------------------- covariance

@dataclass(frozen=True)
class CovarianceEstimate:
    C: np.ndarray
    fidelity: Fidelity
    horizon: int
    gamma: float
    first_lag: int = 0


def covariance_horizon(gamma: float, eps: float = 1e-6, horizon: int | None = None) -> int:
    if horizon is not None:
        if horizon < 1:
            raise ParameterError("horizon must be >= 1")
        return int(horizon)
    if gamma > 1.0:
        raise ParameterError(f"gamma={gamma} > 1: the covariance series diverges")
    if gamma == 1.0:
        raise ParameterError("gamma = 1 needs an explicit finite horizon")
    if gamma == 0.0:
        return 1
    return max(1, math.ceil(math.log(eps) / (2.0 * math.log(gamma))))


def build_covariance_estimate(codebook: Codebook, matrix: RecurrentMatrix, gamma: float,
                              fidelity: Fidelity | str = Fidelity.COARSE, eps: float = 1e-6,
                              horizon: int | None = None, first_lag: int = 0) -> CovarianceEstimate:
    """Analytic second-moment estimate of linear-reservoir states.

    Coarse keeps the per-lag diagonal terms ``gamma^2n W^n Phi (I/D) Phi^T W^-n``;
    fine adds the cross-lag terms carried by the all-ones matrix ``J/D^2``.
    Lags run over ``first_lag .. first_lag + H - 1``. With ``first_lag=0`` the
    most recent input is included, so the fine estimate equals E[x x^T] of the
    unit-input-scaling linear reservoir; ``first_lag=1`` drops that term.
    """
    fidelity = Fidelity(fidelity)
    if gamma > 1.0:
        raise ParameterError(f"gamma={gamma} > 1: the covariance series diverges")
    if gamma < 0.0:
        raise ParameterError("gamma must be non-negative")
    H = covariance_horizon(gamma, eps, horizon)
    D = codebook.D
    if first_lag not in (0, 1):
        raise ParameterError("first_lag must be 0 or 1")
    lags = np.arange(first_lag, first_lag + H)
    weights = gamma ** lags.astype(float)
    orbit = matrix.orbit(codebook.entries, int(lags[-1]), start=first_lag)  # (H, N, D)
    B = (orbit * weights[:, None, None]).transpose(1, 0, 2).reshape(codebook.N, H * D)
    C = B @ B.T / D
    if fidelity is Fidelity.FINE:
        V = orbit.sum(axis=2) * weights[:, None]  # gamma^n W^n Phi 1
        a = V.sum(axis=0)
        C += (np.outer(a, a) - V.T @ V) / D**2
    C = 0.5 * (C + C.T)
    return CovarianceEstimate(C, fidelity, H, float(gamma), first_lag)


def _factor(estimate: CovarianceEstimate):
    C = estimate.C.copy()
    C[np.diag_indices_from(C)] += JITTER * float(np.mean(np.diag(C)))
    try:
        return linalg.cho_factor(C, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError("covariance estimate is not positive definite after jitter") from exc


def covariance_readouts(codebook: Codebook, matrix: RecurrentMatrix, delays,
                        estimate: CovarianceEstimate) -> list[ReadoutMatrix]:
    delays = [int(d) for d in delays]
    factor = _factor(estimate)
    method = ReadoutMethod.COV_FINE if estimate.fidelity is Fidelity.FINE else ReadoutMethod.COV_COARSE
    orbit = matrix.orbit(codebook.entries, max(delays))
    return [ReadoutMatrix(linalg.cho_solve(factor, orbit[d], check_finite=False).T, d, method) for d in delays]


def build_covariance_readout(codebook: Codebook, matrix: RecurrentMatrix, d: int,
                             estimate: CovarianceEstimate) -> ReadoutMatrix:
    return covariance_readouts(codebook, matrix, [d], estimate)[0]


# ---------------------------------------------------------------- noise

def add_noise(trace: StateTrace, snr_db: float, seed: int | np.random.Generator,
              phases=("train", "recall")) -> StateTrace:
    """White Gaussian noise at a per-state SNR; the dynamics themselves stay clean."""
    if math.isinf(snr_db) and snr_db > 0:
        return trace
    if not math.isfinite(snr_db):
        raise ParameterError(f"snr_db must be finite or +inf, got {snr_db}")
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed)
    phases = (phases,) if isinstance(phases, str) else tuple(phases)
    mask = np.zeros(len(trace), dtype=bool)
    for phase in phases:
        mask |= trace.phase_mask(phase)
    states = trace.states.copy()
    X = states[mask]
    power = np.einsum("ij,ij->i", X, X) / X.shape[1]
    sigma = np.sqrt(power / 10.0 ** (snr_db / 10.0))
    states[mask] = X + sigma[:, None] * rng.standard_normal(X.shape)
    return trace.with_states(states)
