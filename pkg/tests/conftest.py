import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from teampulse.model import Recording, VolumeSeries  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = marker.args
        detail = "; ".join(v for k, v in item.user_properties if k == "measured")
        status = "PASS" if rep.passed else "FAIL"
        line = f"{status}  criterion {number}: {title}"
        ACCEPTANCE_LINES.append(line + (f"  [{detail}]" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_recording(columns: dict, start=1_577_894_400.0, period=0.05):
    """Recording from ``{member: samples}``."""
    return Recording.from_series(
        [VolumeSeries(m, start, period, np.asarray(v, dtype=float)) for m, v in columns.items()]
    )


@pytest.fixture
def recording_factory():
    return make_recording
