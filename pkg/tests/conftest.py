import pytest
from hypothesis import HealthCheck, settings

from hybridnoc import photonic as ph
from hybridnoc.electrical import ElectricalCoefficients
from hybridnoc.topology import MeshSpec

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def tech():
    return ph.PhotonicTechParams()


@pytest.fixture(scope="session")
def coef():
    return ElectricalCoefficients()


@pytest.fixture(scope="session")
def mesh():
    return MeshSpec()


_VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""
    table = request.config.stash.setdefault(_VERDICTS, {})

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        table[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(_VERDICTS, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        terminalreporter.write_line(table[number])
