"""Scalar-channel statistics of tanh reservoirs with a permutation matrix.

With a permutation recurrent matrix and bipolar codes, each reservoir unit
follows the scalar recursion

    x(t) = tanh(gamma x(t-1) + beta b(t)),   b(t) = +-1 i.i.d.

because successive inputs along a cycle land on fresh codebook rows. The
codebook readout for delay d then sees, per unit, ``x(t) * b(t-d)``; summing
N independent units gives

    mu_h = N m_d,  sigma_h^2 = N (E[x^2] - m_d^2),  mu_r = 0,  sigma_r^2 = N E[x^2]

with ``m_d = E[x(t) b(t-d)]``. Two estimators are provided: a deterministic
transfer-operator propagation of the stationary density (default) and a
plain Monte Carlo simulation.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..codec import substream
from ..errors import ParameterError

GRID_POINTS = 2001
RESTART = 1e-9


@dataclass(frozen=True)
class ChannelMoments:
    """``overlap[d] = E[x(t) b(t-d)]`` for d = 0..dmax and ``power = E[x^2]``."""

    overlap: np.ndarray
    power: float
    beta: float
    gamma: float

    @property
    def dmax(self) -> int:
        return len(self.overlap) - 1

    def hit_reject(self, N: int, d: int):
        m = float(self.overlap[d])
        return N * m, math.sqrt(max(N * (self.power - m * m), 0.0)), 0.0, math.sqrt(N * self.power)


def _upper_fixed_point(beta: float, gamma: float) -> float:
    x = 1.0
    for _ in range(10_000):
        nxt = math.tanh(gamma * x + beta)
        if abs(nxt - x) < 1e-15:
            break
        x = nxt
    return x


def _linear_split(y: np.ndarray, lo: float, h: float, n: int):
    pos = np.clip((y - lo) / h, 0.0, n - 1.0)
    i0 = np.minimum(np.floor(pos).astype(np.intp), n - 2)
    return i0, pos - i0


def _stationary(i0s, ws, n: int) -> np.ndarray:
    """Long-run density of the chain started at x = 0.

    Solves ``(I - (1-eps) T) pi = eps delta_0``: a vanishing restart rate keeps
    the system regular when the chain splits into two basins (gamma > 1,
    small beta), where it selects the mixture reached from the zero state.
    """
    cols = np.arange(n)
    rows, vals, cc = [], [], []
    for i0, w in zip(i0s, ws):
        rows += [i0, i0 + 1]
        vals += [0.5 * (1 - w), 0.5 * w]
        cc += [cols, cols]
    T = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cc))), shape=(n, n))
    A = sp.identity(n, format="csc") - (1.0 - RESTART) * T.tocsc()
    rhs = np.zeros(n)
    rhs[n // 2] = RESTART
    pi = spla.spsolve(A, rhs)
    pi = 0.5 * (pi + pi[::-1])  # odd dynamics: the stationary law is symmetric
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _push(i0, w, mass, n):
    return np.bincount(i0, (1 - w) * mass, minlength=n) + np.bincount(i0 + 1, w * mass, minlength=n)


def channel_batch(betas, gammas, dmax: int, grid: int = GRID_POINTS, cutoff: float = 0.0):
    """Density propagation for many (beta, gamma) cells at once.

    Returns ``(overlap, power)`` with shapes (cells, dmax+1) and (cells,).
    With ``cutoff > 0`` a cell stops propagating once
    ``|overlap| <= cutoff * sqrt(power)``; its later overlaps are left at 0.
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    betas, gammas = np.broadcast_arrays(betas, gammas)
    if np.any(betas < 0) or np.any(gammas < 0):
        raise ParameterError("beta and gamma must be non-negative")
    cells, n = len(betas), int(grid)
    overlap = np.zeros((cells, dmax + 1))
    power = np.zeros(cells)
    live = np.flatnonzero(betas > 0)
    if len(live) == 0:
        return overlap, power
    I0 = np.empty((len(live), 2, n), dtype=np.intp)
    Wt = np.empty((len(live), 2, n))
    G = np.empty((len(live), n))
    nu = np.empty((len(live), n))
    for r, c in enumerate(live):
        xm = _upper_fixed_point(betas[c], gammas[c])
        x = np.linspace(-xm, xm, n)
        h = x[1] - x[0]
        for k, b in enumerate((1.0, -1.0)):
            I0[r, k], Wt[r, k] = _linear_split(np.tanh(gammas[c] * x + betas[c] * b), -xm, h, n)
        pi = _stationary(I0[r], Wt[r], n)
        power[c] = float(x * x @ pi)
        nu[r] = 0.5 * (_push(I0[r, 0], Wt[r, 0], pi, n) - _push(I0[r, 1], Wt[r, 1], pi, n))
        G[r] = x
    threshold = cutoff * np.sqrt(power[live])
    for d in range(dmax + 1):
        m = np.einsum("ij,ij->i", G, nu)
        overlap[live, d] = m
        if d == dmax:
            break
        if cutoff > 0:
            keep = np.abs(m) > threshold
            if not keep.all():
                live, threshold = live[keep], threshold[keep]
                I0, Wt, G, nu = I0[keep], Wt[keep], G[keep], nu[keep]
                if len(live) == 0:
                    break
        nxt = np.zeros_like(G)
        for k in range(2):
            i0, w = I0[:, k], Wt[:, k]
            nxt += (1 - w) * np.take_along_axis(G, i0, axis=1) + w * np.take_along_axis(G, i0 + 1, axis=1)
        G = 0.5 * nxt
    return overlap, power


@functools.lru_cache(maxsize=256)
def scalar_channel(beta: float, gamma: float, dmax: int, grid: int = GRID_POINTS) -> ChannelMoments:
    overlap, power = channel_batch([beta], [gamma], dmax, grid)
    overlap[0].flags.writeable = False
    return ChannelMoments(overlap[0], float(power[0]), float(beta), float(gamma))


def scalar_channel_mc(beta: float, gamma: float, dmax: int, steps: int = 10 ** 6, burn: int = 1000,
                      chains: int = 1000, seed: int = 0) -> ChannelMoments:
    """Monte Carlo estimate from ``chains`` parallel scalar simulations.

    ``steps`` counts retained samples in total (after ``burn`` steps per chain).
    """
    rng = substream(seed, 0x5C41)
    per_chain = max(steps // chains, 1)
    x = np.zeros(chains)
    for _ in range(burn):
        x = np.tanh(gamma * x + beta * (2.0 * rng.integers(0, 2, chains) - 1.0))
    b = 2.0 * rng.integers(0, 2, (chains, per_chain + dmax)) - 1.0
    xs = np.empty((chains, per_chain))
    for t in range(per_chain + dmax):
        x = np.tanh(gamma * x + beta * b[:, t])
        if t >= dmax:
            xs[:, t - dmax] = x
    overlap = np.array([np.mean(xs * b[:, dmax - d: dmax - d + per_chain]) for d in range(dmax + 1)])
    return ChannelMoments(overlap, float(np.mean(xs * xs)), float(beta), float(gamma))
