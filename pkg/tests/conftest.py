import numpy as np
import pytest

from mchamiltonian import ChainSpec, ModelSpec, PhysicalParams, PotentialSpec, TimeWindow


@pytest.fixture
def harmonic_1d():
    return ModelSpec(PotentialSpec.harmonic(1.0), PhysicalParams(), TimeWindow(2.0, 64))


@pytest.fixture
def free_1d():
    return ModelSpec(PotentialSpec.zero(1), PhysicalParams(), TimeWindow(2.0, 64))


@pytest.fixture
def chain3():
    return ModelSpec(ChainSpec(3, 1.0, 2.0), PhysicalParams(), TimeWindow(2.0, 16))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    """Record one summary line per acceptance criterion; printed at session end."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(criterion: str, ok: bool, detail: str) -> bool:
        lines.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
