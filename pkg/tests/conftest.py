"""
Test configuration and fixtures
"""
import numpy as np
import pytest

from polygpt.config import Tolerances, get_selection, get_settings
from polygpt.services.boxes import pr_box
from polygpt.services.geometry import build_polygon_system


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the expensive oracle checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Fresh settings per test, with outputs redirected to a temporary directory."""
    monkeypatch.setenv("POLYGPT_OUTPUT_DIR", str(tmp_path / "results"))
    monkeypatch.setenv("POLYGPT_WORKERS", "1")
    get_settings.cache_clear()
    get_selection.cache_clear()
    yield
    get_settings.cache_clear()
    get_selection.cache_clear()


@pytest.fixture
def tol():
    """Default tolerances."""
    return Tolerances()


@pytest.fixture
def triangle():
    return build_polygon_system(3, "unrestricted")


@pytest.fixture
def gbit():
    """Square system: the gbit."""
    return build_polygon_system(4, "unrestricted")


@pytest.fixture
def octagon():
    return build_polygon_system(8, "selfdual", "inscribed")


@pytest.fixture
def pr():
    return pr_box()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
