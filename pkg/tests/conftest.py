import pytest
from hypothesis import HealthCheck, settings

from wkgeom.polytope import interval
from wkgeom.sampling import make_rng, random_relative_potential
from wkgeom.weights import constant_weight

settings.register_profile(
    "wkgeom", max_examples=25, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("wkgeom")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log():
    """Append one line per criterion; printed in the terminal summary."""
    return ACCEPTANCE_LINES


@pytest.fixture
def unit():
    return interval(-1.0, 1.0)


@pytest.fixture
def one(unit):
    return constant_weight(unit)


@pytest.fixture
def rng():
    return make_rng(20261018)


@pytest.fixture
def random_f(rng):
    def draw(P=(-1.0, 1.0), **kw):
        return random_relative_potential(rng, P, **kw)
    return draw
