import pytest

from ifrci.model import StudyCounts

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def study():
    """Counts of the town study used as the running example."""
    return StudyCounts(n_total=12597, n_sample=919, n_positive=138, n_deaths=7)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# Coverage runs at the study's scale are shared by several test modules.
STUDY_SPEC = dict(n_total=12597, n_sample=919, n_infected=1892, n_deaths_counterfactual=47)
COVERAGE_REPS = 2000


def _coverage(model):
    from ifrci.intervals import CiConfig
    from ifrci.popsim import PopulationSpec, coverage_experiment

    spec = PopulationSpec(**STUDY_SPEC, replications=COVERAGE_REPS, seed=20200505)
    return coverage_experiment(spec, CiConfig(n_i_stride=8), model=model)


@pytest.fixture(scope="session")
def coverage_binomial():
    return _coverage("binomial")


@pytest.fixture(scope="session")
def coverage_population():
    return _coverage("population")
