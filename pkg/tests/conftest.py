import time

import numpy as np
import pytest
from hypothesis import settings

from mtuplift import datagen
from mtuplift.metalearn import fit_multi_treatment, predict_uplift_matrix

SUITE_BUDGET_S = 300.0

# fixed example streams keep test_output.txt reproducible
settings.register_profile("repo", derandomize=True, deadline=None)
settings.load_profile("repo")

_acceptance = {}
_session_start = [time.perf_counter()]


def pytest_sessionstart(session):
    _session_start[0] = time.perf_counter()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    entry = _acceptance.setdefault(number, {"title": title, "ok": True, "ran": False, "notes": []})
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry["ran"] = True
        if report.outcome != "passed":
            entry["ok"] = False
    for key, value in item.user_properties:
        if key == "measured" and report.when == "call":
            entry["notes"].append(value)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    elapsed = time.perf_counter() - _session_start[0]
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_acceptance):
        entry = _acceptance[number]
        status = "PASS" if entry["ok"] and entry["ran"] else ("FAIL" if entry["ran"] else "NOT RUN")
        tr.write_line(f"criterion {number:>2}: {status}  {entry['title']}")
        for note in entry["notes"]:
            tr.write_line(f"              {note}")
    status = "PASS" if elapsed < SUITE_BUDGET_S else "FAIL"
    tr.write_line(
        f"criterion 10: {status}  full suite wall-clock {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)"
    )


@pytest.fixture
def measured(request):
    """Record a measured value next to the acceptance line of this test."""

    def record(text):
        request.node.user_properties.append(("measured", text))

    return record


@pytest.fixture(scope="session")
def default_train():
    return datagen.default_campaign(seed=0)


@pytest.fixture(scope="session")
def default_test():
    return datagen.default_campaign(seed=1)


@pytest.fixture(scope="session")
def default_t_model(default_train):
    return fit_multi_treatment(default_train[0], "T")


@pytest.fixture(scope="session")
def default_t_scores(default_t_model, default_test):
    return predict_uplift_matrix(default_t_model, default_test[0].features)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
