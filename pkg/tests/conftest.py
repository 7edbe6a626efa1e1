import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (status, one-line summary)
ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.fixture
def record_criterion(request):
    """Append measured values to the summary line of the current acceptance test."""
    notes = []
    request.node.criterion_notes = notes
    return notes.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    number, title = marker.args
    notes = "; ".join(getattr(item, "criterion_notes", []))
    ACCEPTANCE_RESULTS[number] = ("PASS" if rep.passed else "FAIL", f"{title}" + (f" ({notes})" if notes else ""))


@pytest.fixture
def fixture_data():
    from foi.fixture import load_foi_fixture

    return load_foi_fixture()


@pytest.fixture
def write_table(tmp_path):
    def write(header, rows, specs, name="data"):
        import json

        csv_path = tmp_path / f"{name}.csv"
        spec_path = tmp_path / f"{name}.json"
        lines = [",".join(header)] + [",".join(str(c) for c in row) for row in rows]
        csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        spec_path.write_text(json.dumps(specs), encoding="utf-8")
        return csv_path, spec_path

    return write


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        status, text = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {text}")
