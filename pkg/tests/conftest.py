import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session", autouse=True)
def _isolated_cache(tmp_path_factory):
    old = os.environ.get("SEQSAA_CACHE")
    os.environ["SEQSAA_CACHE"] = str(tmp_path_factory.mktemp("truth-cache"))
    yield
    if old is None:
        os.environ.pop("SEQSAA_CACHE", None)
    else:
        os.environ["SEQSAA_CACHE"] = old


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
