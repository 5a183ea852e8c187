import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def paper_result():
    """Fifty-run Monte Carlo of the default scenario (shared, run once)."""
    import time

    from delaynav.harness import ScenarioConfig, run_scenario
    t0 = time.perf_counter()
    result = run_scenario(ScenarioConfig.paper())
    result.elapsed = time.perf_counter() - t0
    return result


@pytest.fixture(scope="session")
def short_inputs():
    """A 90 s slice of the default scenario with all sensor errors enabled."""
    from delaynav.harness import ScenarioConfig, prepare_run
    cfg = ScenarioConfig.paper(trajectory={"duration_s": 90.0}, runs=1)
    return cfg, prepare_run(cfg, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_collection_modifyitems(items):
    # anything depending on the 50-run study is slow
    for item in items:
        if "paper_result" in getattr(item, "fixturenames", ()):
            item.add_marker(pytest.mark.slow)


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[mark.args[0]] = (mark.args[1], "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[n]
        line = f"criterion {n} [PRIMARY] {title}: {status}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)
