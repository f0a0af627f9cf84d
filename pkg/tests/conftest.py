import pytest
from hypothesis import HealthCheck, settings

from pxkirchhoff.solvers import solve_pair
from pxkirchhoff.verification import canonical_problem

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def canonical():
    return canonical_problem("theorem1")


@pytest.fixture(scope="session")
def no_load():
    return canonical_problem("theorem2")


@pytest.fixture(scope="session")
def canonical_pair(canonical):
    spec, prob = canonical
    return solve_pair(prob, spec.solver, probes=spec.probes, seed=spec.constants_seed)


@pytest.fixture(scope="session")
def no_load_pair(no_load):
    spec, prob = no_load
    return solve_pair(prob, spec.solver, probes=spec.probes, seed=spec.constants_seed)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number, label, ok, detail):
        line = f"criterion {number:>2} {label:<28} {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
