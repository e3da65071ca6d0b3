import pytest
from hypothesis import HealthCheck, settings

from mmfield.metric import FiniteMetric, MMField, TargetSpace
from tests.helpers import ACCEPTANCE_LINES

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

R1 = TargetSpace.euclidean(1)


@pytest.fixture
def worked_pair():
    """Two-point fields at distance 1 with values (0, 1) and (0, 0) in R."""
    d = FiniteMetric([[0.0, 1.0], [1.0, 0.0]])
    return MMField.uniform(d, R1, [0.0, 1.0]), MMField.uniform(d, R1, [0.0, 0.0])


@pytest.fixture
def path_metric():
    return FiniteMetric([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])



def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
