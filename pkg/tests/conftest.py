import pytest
from hypothesis import HealthCheck, settings

from bmallows.io import load_potato
from bmallows.partition import build_table
from bmallows.rng import make_rng

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def potato():
    weighing, catalog, truth = load_potato("weighing")
    visual, _, _ = load_potato("visual")
    return {"weighing": weighing, "visual": visual, "catalog": catalog, "truth": truth}


@pytest.fixture(scope="session")
def footrule20():
    """Importance-sampling table for the potato data (n=20), built once per session."""
    return build_table(20, "footrule", K=10**5, seed=1)


@pytest.fixture(scope="session")
def small_tables():
    return {(n, m): build_table(n, m) for n in range(2, 9)
            for m in ("footrule", "spearman", "kendall")}


@pytest.fixture
def rng():
    return make_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request, capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def emit(criterion: int, ok: bool, detail: str):
        line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash.setdefault(ACCEPTANCE, []).append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
