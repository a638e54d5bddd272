"""Which theory questions can be answered for each (matrix, dynamics, readout) cell.

Q1: readout obtainable without learning.
Q2: accuracy predictable from measured output-neuron statistics.
Q3: accuracy predictable from hyperparameters alone.
"""
from __future__ import annotations

from typing import NamedTuple

from ..readout import ReadoutMethod
from ..reservoir import MatrixKind, Variant


class Answers(NamedTuple):
    q1: bool
    q2: bool
    q3: bool


_YES3 = Answers(True, True, True)
_YES2 = Answers(True, True, False)
_REG = Answers(False, True, False)
_NONE = Answers(False, False, False)

# covariance readouts exist only for linear units
TABLE: dict[tuple[MatrixKind, Variant, str], Answers] = {}
for _kind in MatrixKind:
    for _v in Variant:
        _codebook_q3 = _kind is MatrixKind.PERMUTATION or _v.is_linear
        TABLE[_kind, _v, "codebook"] = _YES3 if _codebook_q3 else _YES2
        TABLE[_kind, _v, "regression"] = _REG
        TABLE[_kind, _v, "covariance"] = _YES2 if _v.is_linear else _NONE


def _column(method) -> str:
    if isinstance(method, str) and method in ("codebook", "regression", "covariance"):
        return method
    method = ReadoutMethod(method)
    if method in (ReadoutMethod.COV_COARSE, ReadoutMethod.COV_FINE):
        return "covariance"
    return method.value


def capability(kind, variant, method) -> Answers:
    return TABLE[MatrixKind(kind), Variant(variant), _column(method)]
