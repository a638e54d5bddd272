import numpy as np
import pytest

from esnlab.codec import gen_codebook
from esnlab.reservoir import ReservoirSpec, gen_recurrent


@pytest.fixture
def make_spec():
    def _make(N=64, D=4, variant="V1", kind="permutation", seed=0, **params):
        return ReservoirSpec(N, variant, gen_recurrent(kind, N, seed), gen_codebook(N, D, seed + 1), **params)

    return _make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Record one acceptance line per criterion; printed in the terminal summary."""

    def _record(number: int, ok: bool, detail: str):
        ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
