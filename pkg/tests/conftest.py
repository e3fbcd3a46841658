import numpy as np
import pytest
from hypothesis import settings

from nssubdiv.schemes import parse_scheme

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

NONSTATIONARY = ["trig-ds:h=1/16", "trig-ds:h=1", "exp-cc:theta=3", "exp-cc:theta=10i"]
VALENCES = list(range(5, 11))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(params=NONSTATIONARY)
def ns_scheme(request):
    return parse_scheme(request.param)


def random_patch_data(scheme, n, rng, dim=3):
    """Random control points in patch layout; primal patches get one consistent centre."""
    d = rng.standard_normal((n * scheme.block_size, dim))
    if scheme.kind == "primal":
        d[0::7] = d[0]
    return d


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
