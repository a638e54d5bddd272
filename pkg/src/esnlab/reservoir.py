"""Recurrent matrices and the five reservoir update rules.

Every variant is an instance of the leaky tanh update

    x(n) = (1 - alpha) x(n-1) + alpha f(gamma W x(n-1) + beta Phi u(n))

with ``f`` the identity for the linear variants (V1, V2) and ``tanh``
otherwise. Parameters a variant does not expose are pinned to one.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .codec import Codebook, SymbolSequence, substream
from .errors import ParameterError


class MatrixKind(str, enum.Enum):
    PERMUTATION = "permutation"
    ORTHOGONAL = "orthogonal"


class Variant(str, enum.Enum):
    V1 = "V1"  # linear
    V2 = "V2"  # linear, input scaling + decay
    V3 = "V3"  # tanh, input scaling
    V4 = "V4"  # tanh, input scaling + decay
    V5 = "V5"  # leaky tanh, all three

    @property
    def is_linear(self) -> bool:
        return self in (Variant.V1, Variant.V2)

    @property
    def free(self) -> frozenset:
        """Hyperparameters that may differ from one."""
        return _FREE[self]


_FREE = {
    Variant.V1: frozenset(),
    Variant.V2: frozenset({"beta", "gamma"}),
    Variant.V3: frozenset({"beta"}),
    Variant.V4: frozenset({"beta", "gamma"}),
    Variant.V5: frozenset({"alpha", "beta", "gamma"}),
}


class CycleAliasingWarning(UserWarning):
    """Memory horizon longer than the shortest cycle of a permutation reservoir."""


def _min_cycle(perm: np.ndarray) -> int:
    seen = np.zeros(len(perm), dtype=bool)
    best = len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length, j = 0, start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        best = min(best, length)
    return best


@dataclass(frozen=True)
class RecurrentMatrix:
    """Unit-spectral-radius recurrent matrix.

    Permutations are stored as an index map ``p`` with ``(W v)[i] = v[p[i]]``;
    orthogonal matrices are stored densely. Inverse powers use the inverse
    permutation or the transpose.
    """

    kind: MatrixKind
    N: int
    perm: np.ndarray | None = None
    dense: np.ndarray | None = None
    min_cycle: int | None = None
    _powers: dict = field(default_factory=dict, compare=False, repr=False)

    def _perm_power(self, e: int) -> np.ndarray:
        idx = self._powers.get(e)
        if idx is not None:
            return idx
        if e == 0:
            idx = np.arange(self.N)
        elif e == -1:
            idx = np.empty(self.N, dtype=np.intp)
            idx[self.perm] = np.arange(self.N)
        elif e == 1:
            idx = self.perm
        else:
            base = self._perm_power(1 if e > 0 else -1)
            half = self._perm_power(int(math.copysign(abs(e) // 2, e)))
            idx = half[half]
            if abs(e) % 2:
                idx = idx[base]
        self._powers[e] = idx
        return idx

    def _dense_power(self, e: int) -> np.ndarray:
        if e < 0:
            return self._dense_power(-e).T
        mat = self._powers.get(e)
        if mat is None:
            mat = np.linalg.matrix_power(self.dense, e)
            if len(self._powers) < 64:
                self._powers[e] = mat
        return mat

    def apply(self, v: np.ndarray, exponent: int = 1) -> np.ndarray:
        """``W^exponent @ v`` for ``v`` of shape (N,) or (N, k)."""
        if v.shape[0] != self.N:
            raise ParameterError(f"vector has leading dimension {v.shape[0]}, expected {self.N}")
        if self.kind is MatrixKind.PERMUTATION:
            return v[self._perm_power(int(exponent))]
        if exponent == 0:
            return v.copy()
        return self._dense_power(int(exponent)) @ v

    def apply_rows(self, X: np.ndarray, exponent: int = 1) -> np.ndarray:
        """Apply ``W^exponent`` to every row of ``X`` (states stored row-wise)."""
        if self.kind is MatrixKind.PERMUTATION:
            return X[..., self._perm_power(int(exponent))]
        if exponent == 0:
            return X.copy()
        return X @ self._dense_power(int(exponent)).T

    def orbit(self, V: np.ndarray, kmax: int, start: int = 0) -> np.ndarray:
        """Stack ``[W^start V, ..., W^kmax V]`` along a new leading axis."""
        out = np.empty((kmax - start + 1,) + V.shape)
        cur = self.apply(V, start) if start else np.array(V, dtype=float)
        for k in range(kmax - start + 1):
            out[k] = cur
            if k < kmax - start:
                cur = cur[self.perm] if self.kind is MatrixKind.PERMUTATION else self.dense @ cur
        return out

    def todense(self) -> np.ndarray:
        if self.kind is MatrixKind.ORTHOGONAL:
            return self.dense.copy()
        W = np.zeros((self.N, self.N))
        W[np.arange(self.N), self.perm] = 1.0
        return W


def gen_recurrent(kind: MatrixKind | str, N: int, seed: int | np.random.Generator) -> RecurrentMatrix:
    kind = MatrixKind(kind)
    if N < 1:
        raise ParameterError(f"reservoir size must be >= 1, got {N}")
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed)
    if kind is MatrixKind.PERMUTATION:
        perm = rng.permutation(N)
        return RecurrentMatrix(kind, N, perm=perm, min_cycle=_min_cycle(perm))
    A = rng.standard_normal((N, N))
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return RecurrentMatrix(kind, N, dense=Q * signs, min_cycle=None)


def matrix_power_apply(matrix: RecurrentMatrix, exponent: int, v: np.ndarray) -> np.ndarray:
    return matrix.apply(v, exponent)


@dataclass(frozen=True)
class ReservoirSpec:
    N: int
    variant: Variant
    matrix: RecurrentMatrix
    codebook: Codebook
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if name not in self.variant.free and value != 1.0:
                raise ParameterError(f"{self.variant.value} pins {name} to 1, got {value}")
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.beta < 0 or self.gamma < 0:
            raise ParameterError("beta and gamma must be non-negative")
        if self.matrix.N != self.N or self.codebook.N != self.N:
            raise ParameterError("matrix, codebook and N disagree")

    @property
    def kind(self) -> MatrixKind:
        return self.matrix.kind

    @property
    def D(self) -> int:
        return self.codebook.D


@dataclass(frozen=True)
class ReservoirState:
    x: np.ndarray
    n: int = 0


def advance(X: np.ndarray, symbols, spec: ReservoirSpec) -> np.ndarray:
    """One update for a single state (N,) or a batch of row states (B, N)."""
    drive = spec.gamma * spec.matrix.apply_rows(X) + spec.beta * spec.codebook.entries.T[symbols]
    if spec.variant.is_linear:
        return drive
    if spec.alpha == 1.0:
        return np.tanh(drive)
    return (1.0 - spec.alpha) * X + spec.alpha * np.tanh(drive)


def step(state: ReservoirState, symbol: int, spec: ReservoirSpec) -> ReservoirState:
    if state.x.shape != (spec.N,):
        raise ParameterError(f"state has shape {state.x.shape}, expected ({spec.N},)")
    if not 0 <= symbol < spec.D:
        raise ParameterError(f"symbol {symbol} outside [0, {spec.D})")
    return ReservoirState(advance(state.x, symbol, spec), state.n + 1)


def memory_horizon(spec: ReservoirSpec, length: int, eps: float = 1e-6) -> int:
    """Number of past inputs that still leave a trace above ``eps`` in power."""
    g = (1.0 - spec.alpha) + spec.alpha * spec.gamma
    if 0.0 < g < 1.0:
        return min(length, math.ceil(math.log(eps) / (2 * math.log(g))))
    return length


def _check_cycles(spec: ReservoirSpec, length: int) -> None:
    if spec.matrix.kind is not MatrixKind.PERMUTATION:
        return
    horizon = memory_horizon(spec, length)
    if horizon > spec.matrix.min_cycle:
        warnings.warn(
            f"memory horizon {horizon} exceeds shortest permutation cycle {spec.matrix.min_cycle}; "
            "traces on short cycles alias",
            CycleAliasingWarning,
            stacklevel=3,
        )


PHASES = ("warmup", "train", "recall")


@dataclass(frozen=True)
class StateTrace:
    """Retained reservoir states (row-wise) and the sequence that produced them."""

    states: np.ndarray
    steps: np.ndarray
    sequence: SymbolSequence

    def __len__(self):
        return len(self.steps)

    def state(self, i: int) -> ReservoirState:
        return ReservoirState(self.states[i], int(self.steps[i]))

    def phase_mask(self, phase: str) -> np.ndarray:
        E, M = self.sequence.E, self.sequence.M
        if phase == "train":
            return (self.steps > E) & (self.steps <= E + M)
        if phase == "recall":
            return self.steps > E + M
        if phase == "warmup":
            return self.steps <= E
        raise ParameterError(f"unknown phase {phase!r}")

    def select(self, phase: str) -> tuple[np.ndarray, np.ndarray]:
        mask = self.phase_mask(phase)
        return self.states[mask], self.steps[mask]

    def labels(self, d: int, phase: str) -> np.ndarray:
        """Symbols s(n - d) for the retained states of ``phase``."""
        steps = self.steps[self.phase_mask(phase)]
        if len(steps) and steps.min() - d < 1:
            raise ParameterError(f"delay {d} reaches before the start of the sequence")
        return self.sequence.symbols[steps - 1 - d]

    def with_states(self, states: np.ndarray) -> "StateTrace":
        return StateTrace(states, self.steps, self.sequence)


def run(sequence: SymbolSequence, spec: ReservoirSpec, retain=("train", "recall")) -> StateTrace:
    """Drive the reservoir from the zero state and keep the states of ``retain``."""
    if sequence.D != spec.D:
        raise ParameterError("sequence alphabet and codebook disagree")
    retain = (retain,) if isinstance(retain, str) else tuple(retain)
    for name in retain:
        if name not in PHASES:
            raise ParameterError(f"unknown phase {name!r}")
    _check_cycles(spec, len(sequence))
    E, M = sequence.E, sequence.M
    keep = np.zeros(len(sequence), dtype=bool)
    if "warmup" in retain:
        keep[:E] = True
    if "train" in retain:
        keep[E:E + M] = True
    if "recall" in retain:
        keep[E + M:] = True
    states = np.empty((int(keep.sum()), spec.N))
    x = np.zeros(spec.N)
    row = 0
    for t, s in enumerate(sequence.symbols):
        x = advance(x, s, spec)
        if keep[t]:
            states[row] = x
            row += 1
    return StateTrace(states, np.flatnonzero(keep) + 1, sequence)


def final_states(symbols: np.ndarray, spec: ReservoirSpec, lengths=None, x0: np.ndarray | None = None) -> dict:
    """Run a batch of sequences (rows of ``symbols``) and return ``{G: states at step G}``.

    ``lengths`` defaults to the full row length. Starting state is zero unless
    ``x0`` (one row per sequence, or a single row broadcast) is given.
    """
    symbols = np.asarray(symbols)
    B, T = symbols.shape
    lengths = sorted({T} if lengths is None else set(int(g) for g in lengths))
    if lengths[0] < 1 or lengths[-1] > T:
        raise ParameterError("requested lengths outside the sequence")
    _check_cycles(spec, lengths[-1])
    if x0 is None and spec.variant.is_linear and spec.kind is MatrixKind.ORTHOGONAL and B > spec.D:
        return _linear_final_states(symbols, spec, lengths)
    X = np.zeros((B, spec.N)) if x0 is None else np.broadcast_to(x0, (B, spec.N)).copy()
    out = {}
    for t in range(lengths[-1]):
        X = advance(X, symbols[:, t], spec)
        if t + 1 in lengths:
            out[t + 1] = X.copy()
    return out


def _linear_final_states(symbols: np.ndarray, spec: ReservoirSpec, lengths) -> dict:
    """Superposition ``x(G) = beta sum_k gamma^k W^k Phi u(G-k)`` for linear reservoirs.

    Propagates the D codebook columns instead of every sequence, which is
    cheaper for dense matrices whenever the batch exceeds D.
    """
    K = lengths[-1]
    orbit = spec.matrix.orbit(spec.codebook.entries, K - 1)  # (K, N, D)
    orbit *= (spec.beta * spec.gamma ** np.arange(K, dtype=float))[:, None, None]
    terms = orbit.transpose(0, 2, 1)  # (K, D, N)
    out = {}
    for G in lengths:
        X = np.zeros((symbols.shape[0], spec.N))
        for k in range(G):
            X += terms[k][symbols[:, G - 1 - k]]
        out[G] = X
    return out
