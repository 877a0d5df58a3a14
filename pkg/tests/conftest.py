import pytest
from hypothesis import settings

from unbiased_market import (
    CohortSpec,
    PointMass,
    QuestionGrid,
    UtilitySpec,
    generate_population,
    run_elicitation,
)
from unbiased_market.harness.config import ScenarioConfig, reference_cohorts

# Fixed example order keeps every run of the suite identical.
settings.register_profile("deterministic", derandomize=True, deadline=None)
settings.load_profile("deterministic")

CARA1 = UtilitySpec("cara", 1.0)
LINEAR = UtilitySpec.linear()


@pytest.fixture(scope="session")
def reference_pop():
    """1000 sellers: 500 at cost 10 and 500 at cost 0, all CARA a=1."""
    return generate_population(reference_cohorts(), 1000, seed=7)


@pytest.fixture(scope="session")
def reference_grid():
    return ScenarioConfig().grid


@pytest.fixture(scope="session")
def reference_log(reference_pop, reference_grid):
    return run_elicitation(reference_pop, reference_grid)


@pytest.fixture
def single_cohort():
    def make(cost=0.0, utility=CARA1, mean=0.5, name="only"):
        return [CohortSpec(name, 1.0, PointMass(cost), utility, attribute_mean=mean)]

    return make


@pytest.fixture(scope="session")
def tiny_grid():
    return QuestionGrid((0.2,), (10.0,), (1.0,))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
