from __future__ import annotations

import pytest

from miniair.installer import Registry


@pytest.fixture
def home(tmp_path):
    """A fresh runtime home directory."""
    return tmp_path / "mair-home"


@pytest.fixture
def env(home):
    return {"MAIR_HOME": str(home)}


@pytest.fixture
def registry(home):
    return Registry(root=home)
