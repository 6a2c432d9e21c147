from __future__ import annotations

import logging
import sys
from pathlib import Path

import pytest


def pytest_sessionstart(session) -> None:
    """Put src/ first on sys.path so the checkout is tested, not an installed ks_glimm."""
    repo_root = Path(__file__).resolve().parents[1]
    for p in [repo_root / "src", repo_root]:
        ps = str(p)
        if ps not in sys.path:
            sys.path.insert(0, ps)


@pytest.fixture(autouse=True)
def data_dir(monkeypatch, tmp_path: Path) -> Path:
    """Route default run outputs into the test's tmp dir."""
    d = tmp_path / "data"
    monkeypatch.setenv("KS_GLIMM_DATA_DIR", str(d))
    return d


@pytest.fixture(autouse=True)
def _quiet_ks_glimm_logger():
    # CLI tests install a handler; keep its level from leaking between tests.
    logger = logging.getLogger("ks_glimm")
    level = logger.level
    yield
    logger.setLevel(level)
