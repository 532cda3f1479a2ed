import os

import numpy as np
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture(autouse=True, scope="session")
def _isolated_cache(tmp_path_factory):
    path = tmp_path_factory.mktemp("grid_cache")
    old = os.environ.get("LATTICEDSP_CACHE_DIR")
    os.environ["LATTICEDSP_CACHE_DIR"] = str(path)
    yield path
    if old is None:
        os.environ.pop("LATTICEDSP_CACHE_DIR", None)
    else:
        os.environ["LATTICEDSP_CACHE_DIR"] = old


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
