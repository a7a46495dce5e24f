import sys
from pathlib import Path

import pytest

from rnnbounds import load_dataset, load_model

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_model():
    return load_model(FIXTURES / "vanilla_model.json")


@pytest.fixture(scope="session")
def fixture_data():
    return load_dataset(FIXTURES / "running_sign.json")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
