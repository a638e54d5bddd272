"""Symbol alphabets, random sequences and bipolar codebooks.

All randomness flows through :func:`substream`, which derives an independent
Philox generator from an experiment seed plus any number of integer keys
(trial index, grid cell, ...). Two calls with the same keys give bit-identical
streams regardless of the order in which workers run.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, *keys)``."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)]
    if any(k < 0 for k in entropy):
        raise ParameterError(f"substream keys must be non-negative, got {entropy}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class Alphabet:
    D: int

    def __post_init__(self):
        if int(self.D) < 2:
            raise ParameterError(f"alphabet size must be >= 2, got {self.D}")


@dataclass(frozen=True)
class SymbolSequence:
    """Integer symbols split into warm-up (E), memorization (M) and recall (R) phases."""

    symbols: np.ndarray
    E: int
    M: int
    R: int
    D: int

    def __post_init__(self):
        if len(self.symbols) != self.E + self.M + self.R:
            raise ParameterError("sequence length must equal E+M+R")
        if len(self.symbols) and (self.symbols.min() < 0 or self.symbols.max() >= self.D):
            raise ParameterError("symbol out of alphabet range")

    def __len__(self):
        return len(self.symbols)

    def onehots(self) -> np.ndarray:
        return np.eye(self.D)[self.symbols]


@dataclass(frozen=True)
class Codebook:
    """N x D bipolar matrix; also serves as the input projection."""

    entries: np.ndarray
    rng_seed: int

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def D(self) -> int:
        return self.entries.shape[1]


def gen_codebook(N: int, D: int, seed: int | np.random.Generator) -> Codebook:
    if N < 1 or D < 2:
        raise ParameterError(f"codebook needs N >= 1 and D >= 2, got N={N}, D={D}")
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed)
    entries = 2.0 * rng.integers(0, 2, size=(N, D)) - 1.0
    entries.flags.writeable = False
    return Codebook(entries, -1 if isinstance(seed, np.random.Generator) else int(seed))


def gen_sequence(E: int, M: int, R: int, D: int, seed: int | np.random.Generator) -> SymbolSequence:
    if D < 2:
        raise ParameterError(f"alphabet size must be >= 2, got {D}")
    if min(E, M, R) < 0 or E + M + R < 1:
        raise ParameterError("phase lengths must be non-negative with E+M+R >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed)
    symbols = rng.integers(0, D, size=E + M + R)
    return SymbolSequence(symbols, E, M, R, D)


def one_hot(i: int, D: int) -> np.ndarray:
    if not 0 <= i < D:
        raise ParameterError(f"symbol {i} outside [0, {D})")
    v = np.zeros(D)
    v[i] = 1.0
    return v
