import pytest

from esnlab.readout import ReadoutMethod
from esnlab.reservoir import MatrixKind, Variant
from esnlab.theory.capability import TABLE, capability

Y, N = True, False
# rows V1..V5; columns codebook Q1-3, regression Q1-3, covariance Q1-3
EXPECTED = {
    MatrixKind.PERMUTATION: [
        (Y, Y, Y, N, Y, N, Y, Y, N),
        (Y, Y, Y, N, Y, N, Y, Y, N),
        (Y, Y, Y, N, Y, N, N, N, N),
        (Y, Y, Y, N, Y, N, N, N, N),
        (Y, Y, Y, N, Y, N, N, N, N),
    ],
    MatrixKind.ORTHOGONAL: [
        (Y, Y, Y, N, Y, N, Y, Y, N),
        (Y, Y, Y, N, Y, N, Y, Y, N),
        (Y, Y, N, N, Y, N, N, N, N),
        (Y, Y, N, N, Y, N, N, N, N),
        (Y, Y, N, N, Y, N, N, N, N),
    ],
}


@pytest.mark.parametrize("kind", list(MatrixKind))
@pytest.mark.parametrize("row", range(5))
def test_applicability_table(kind, row):
    v = list(Variant)[row]
    got = (*capability(kind, v, "codebook"), *capability(kind, v, ReadoutMethod.REGRESSION),
           *capability(kind, v, ReadoutMethod.COV_FINE))
    assert got == EXPECTED[kind][row]


def test_table_has_thirty_cells():
    assert len(TABLE) == 30


def test_covariance_fidelities_share_a_column():
    assert capability("orthogonal", "V2", "cov_coarse") == capability("orthogonal", "V2", "cov_fine")
