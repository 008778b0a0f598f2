from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))  # makes `oracles` importable from any cwd


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return TESTS_DIR / "data"


@pytest.fixture(scope="session")
def quadrat_image(data_dir) -> Path:
    return data_dir / "quadrat_100.png"


@pytest.fixture(scope="session")
def small_image(data_dir) -> Path:
    return data_dir / "quadrat_64.png"
