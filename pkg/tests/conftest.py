import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from adrcnn.synthetic import write_synthetic  # noqa: E402

# criterion number -> list of (outcome, detail)
_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = ""
        if report.skipped and isinstance(report.longrepr, tuple):
            detail = report.longrepr[2]
        _OUTCOMES.setdefault((number, title), []).append((report.outcome, item.name, detail))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), results in sorted(_OUTCOMES.items()):
        outcomes = {r[0] for r in results}
        if "failed" in outcomes:
            status = "FAIL"
        elif outcomes == {"skipped"}:
            status = "SKIP"
        else:
            status = "PASS"
        line = f"ACCEPTANCE {status} criterion {number}: {title}"
        reasons = sorted({why.removeprefix("Skipped: ") for o, _, why in results
                          if o == "skipped"})
        if reasons:
            line += " [skipped: " + "; ".join(reasons) + "]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synthetic_2000(tmp_path_factory):
    """The 2000-sentence keyword corpus: ``(pos_path, neg_path)``."""
    return write_synthetic(tmp_path_factory.mktemp("synth_large"), n=2000, seed=42)


@pytest.fixture(scope="session")
def synthetic_200(tmp_path_factory):
    return write_synthetic(tmp_path_factory.mktemp("synth_small"), n=200, seed=7,
                           positive_fraction=0.5)
