"""Shared fixtures; puts scripts/ on sys.path and keeps run data in a temp dir."""

import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

SCRIPTS_DIR = Path(__file__).parent.parent / "scripts"
sys.path.insert(0, str(SCRIPTS_DIR))

# logger.py and config.py create their directories at import time
os.environ.setdefault("CERTIFY_DATA_DIR", tempfile.mkdtemp(prefix="certify-tests-"))
os.environ.setdefault("CERTIFY_LOG_LEVEL", "WARNING")

from config import reset_config  # noqa: E402
from geometry import Polygon, Rect, sawblade_domain  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end acceptance checks (seconds to minutes)")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_rect():
    return Rect(0.0, 1.0, 0.0, 1.0)


@pytest.fixture
def unit_square():
    return Polygon([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])


@pytest.fixture(scope="session")
def sawblade():
    return sawblade_domain()


@pytest.fixture
def fresh_config(monkeypatch, tmp_path):
    """Config re-read from a clean environment with data under tmp_path."""
    monkeypatch.setenv("CERTIFY_DATA_DIR", str(tmp_path / "data"))
    for name in ("CERTIFY_WORKERS", "CERTIFY_INNER_ORDER", "CERTIFY_OUTER_ORDER", "CERTIFY_INNER_POINTS",
                 "CERTIFY_TRIANGLE_ORDER", "CERTIFY_REFINE_LEVELS", "CERTIFY_TIME_POINTS",
                 "CERTIFY_ORACLE_LEVELS", "CERTIFY_REPORT_TOLERANCE"):
        monkeypatch.delenv(name, raising=False)
    reset_config()
    from config import get_config
    yield get_config()
    reset_config()
