"""Information capacity, Z-scores and readout geometry."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import CapabilityError, NumericalError, ParameterError
from .readout import ReadoutMatrix, ReadoutMethod
from .reservoir import MatrixKind, Variant
from .theory.capability import capability
from .theory.channel import channel_batch
from .theory.perceptron import MomentStatsReduced, predict_iid_array

INFO_FLOOR = 1e-3
INFO_RUN = 5
SURFACE_GRID = 1001
# stop propagating a cell once its accuracy excess over chance is far below any floor
SURFACE_CUTOFF = 1e-7


@dataclass(frozen=True)
class AccuracyCurve:
    """Accuracy ``p_c(d)`` over delays (or over stored lengths for fixed-length runs)."""

    delays: np.ndarray
    accuracy: np.ndarray
    source: str = "empirical"
    stderr: np.ndarray | None = None

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=int)
        acc = np.asarray(self.accuracy, dtype=float)
        if delays.shape != acc.shape:
            raise ParameterError("delays and accuracies differ in length")
        if np.any(acc < 0) or np.any(acc > 1):
            raise ParameterError("accuracies must lie in [0, 1]")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "accuracy", acc)
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))

    def __len__(self):
        return len(self.delays)


@dataclass(frozen=True)
class CapacitySurface:
    betas: np.ndarray
    gammas: np.ndarray
    bits: np.ndarray  # (len(betas), len(gammas))
    incomplete: np.ndarray = field(default=None)

    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(int(np.argmax(self.bits)), self.bits.shape)
        return float(self.betas[i]), float(self.gammas[j])

    def ridge(self) -> np.ndarray:
        """Best gamma for each beta."""
        return self.gammas[np.argmax(self.bits, axis=1)]

    def rows(self):
        for i, b in enumerate(self.betas):
            for j, g in enumerate(self.gammas):
                yield float(b), float(g), float(self.bits[i, j])


class InformationTotal(NamedTuple):
    bits: float
    incomplete: bool
    truncated_at: int | None


def item_information(p_c, D: int):
    """Bits retrieved per item at accuracy ``p_c`` among ``D`` equiprobable symbols."""
    if D < 2:
        raise ParameterError("D must be >= 2")
    p = np.asarray(p_c, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ParameterError("accuracy must lie in [0, 1]")
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        hit = np.where(p > 0, p * np.log2(np.where(p > 0, D * p, 1.0)), 0.0)
        miss = np.where(q > 0, q * np.log2(np.where(q > 0, D * q / (D - 1), 1.0)), 0.0)
    out = np.maximum(hit + miss, 0.0)
    return float(out) if out.ndim == 0 else out


def total_information(curve: AccuracyCurve | np.ndarray, D: int, floor: float = INFO_FLOOR,
                      run: int = INFO_RUN) -> InformationTotal:
    """Sum of item information over delays, stopping where accuracy has settled at chance.

    Truncates at the first delay that starts ``run`` consecutive delays with
    ``p_c < 1/D + floor``. A curve that never settles gives its full sum
    flagged ``incomplete``.
    """
    acc = curve.accuracy if isinstance(curve, AccuracyCurve) else np.asarray(curve, dtype=float)
    low = acc < 1.0 / D + floor
    streak = 0
    for d, flag in enumerate(low):
        streak = streak + 1 if flag else 0
        if streak == run:
            stop = d - run + 1
            return InformationTotal(float(np.sum(item_information(acc[:stop], D))), False, stop)
    return InformationTotal(float(np.sum(item_information(acc, D))), True, None)


def _bits_matrix(acc: np.ndarray, D: int, floor: float, run: int):
    """Row-wise :func:`total_information` for a (cells, delays) accuracy array."""
    info = item_information(acc, D)
    low = (acc < 1.0 / D + floor).astype(int)
    # streak[c, d] = number of consecutive low delays ending at d
    csum = np.cumsum(low, axis=1)
    reset = np.maximum.accumulate(np.where(low == 0, csum, 0), axis=1)
    streak = csum - reset
    hit = streak >= run
    found = hit.any(axis=1)
    stop = np.where(found, np.argmax(hit, axis=1) - run + 1, acc.shape[1])
    mask = np.arange(acc.shape[1])[None, :] < stop[:, None]
    return (info * mask).sum(axis=1), ~found


def zscore(stats: MomentStatsReduced) -> float:
    """Separation of hit and reject distributions in pooled standard deviations."""
    scale = math.hypot(stats.sigma_h, stats.sigma_r)
    if scale <= 0:
        raise ParameterError("z-score needs positive spread")
    return (stats.mu_h - stats.mu_r) / scale


@dataclass(frozen=True)
class GeometryReport:
    D: int
    cosine_mean: float
    cosine_std: float
    norm_mean: float
    norm_std: float
    etf_target: float
    etf_deviation: float
    cosines: np.ndarray


def geometry_report(readout: ReadoutMatrix | np.ndarray) -> GeometryReport:
    """Pairwise cosines and norms of raw readout rows, compared with a simplex ETF."""
    rows = readout.rows if isinstance(readout, ReadoutMatrix) else np.asarray(readout, dtype=float)
    D = rows.shape[0]
    if D < 2:
        raise ParameterError("geometry needs D >= 2")
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0):
        raise NumericalError("cosine undefined for a zero readout row")
    U = rows / norms[:, None]
    iu = np.triu_indices(D, 1)
    cos = np.clip((U @ U.T)[iu], -1.0, 1.0)
    target = -1.0 / (D - 1)
    return GeometryReport(D, float(cos.mean()), float(cos.std()), float(norms.mean()), float(norms.std()),
                          target, float(np.max(np.abs(cos - target))), cos)


def _analytic_chunk(args):
    betas, gammas, N, D, dmax, floor, run, grid = args
    overlap, power = channel_batch(betas, gammas, dmax, grid, cutoff=SURFACE_CUTOFF)
    mu_h = N * overlap
    sigma_h = np.sqrt(np.maximum(N * (power[:, None] - overlap ** 2), 0.0))
    sigma_r = np.sqrt(N * power)[:, None]
    acc = predict_iid_array(mu_h, sigma_h, 0.0, sigma_r, D)
    # beta = 0 carries no signal at all
    acc[betas == 0] = 1.0 / D
    return _bits_matrix(acc, D, floor, run)


def capacity_surface(template, betas, gammas, predictor: str = "analytic", *, D: int | None = None,
                     dmax: int | None = None, floor: float = INFO_FLOOR, run: int = INFO_RUN,
                     jobs: int = 1, chunk: int = 256, grid: int | None = None, trials: int = 3,
                     seed: int = 0, length: int = 3000) -> CapacitySurface:
    """Total information over a (beta, gamma) grid.

    ``template`` supplies ``N``, ``variant``, ``kind``, ``alpha`` (a
    :class:`~esnlab.theory.moments.ModelParams` or
    :class:`~esnlab.tasks.ExperimentConfig`) and ``D`` unless given. The
    analytic predictor uses scalar-channel moments with the codebook readout;
    the empirical one simulates ``trials`` streams of ``length`` recall
    states per cell.
    """
    betas = np.asarray(betas, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    N = int(template.N)
    D = int(D if D is not None else template.D)
    dmax = 2 * N if dmax is None else int(dmax)
    variant, kind = Variant(template.variant), MatrixKind(template.kind)
    B, G = np.meshgrid(betas, gammas, indexing="ij")
    flat_b, flat_g = B.ravel(), G.ravel()
    if predictor == "analytic":
        if not capability(kind, variant, ReadoutMethod.CODEBOOK).q3:
            raise CapabilityError(f"no analytic capacity for ({kind.value}, {variant.value})")
        if variant not in (Variant.V3, Variant.V4) or getattr(template, "alpha", 1.0) != 1.0:
            raise CapabilityError("analytic capacity sweeps cover tanh reservoirs with alpha = 1")
        parts = [(flat_b[i:i + chunk], flat_g[i:i + chunk], N, D, dmax, floor, run, grid or SURFACE_GRID)
                 for i in range(0, len(flat_b), chunk)]
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as pool:
                results = list(pool.map(_analytic_chunk, parts))
        else:
            results = [_analytic_chunk(p) for p in parts]
        bits = np.concatenate([r[0] for r in results])
        incomplete = np.concatenate([r[1] for r in results])
    elif predictor == "empirical":
        from .tasks import empirical_capacity_cells

        bits, incomplete = empirical_capacity_cells(template, flat_b, flat_g, D=D, dmax=dmax, floor=floor,
                                                    run=run, trials=trials, seed=seed, length=length, jobs=jobs)
    else:
        raise ParameterError(f"predictor must be 'analytic' or 'empirical', got {predictor!r}")
    return CapacitySurface(betas, gammas, bits.reshape(B.shape), np.asarray(incomplete).reshape(B.shape))


def grid_values(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive grid ``start, start+step, ..., stop`` without float drift."""
    n = int(round((stop - start) / step))
    return np.round(start + step * np.arange(n + 1), 10)


__all__ = [
    "AccuracyCurve", "CapacitySurface", "InformationTotal", "GeometryReport", "item_information",
    "total_information", "zscore", "geometry_report", "capacity_surface", "grid_values",
]
