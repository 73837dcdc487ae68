from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES = TESTS_DIR.parent / "fixtures"

# Make the sibling oracle module importable regardless of how pytest is invoked.
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def home_graph():
    from interlock.graph_model import load_graph

    return load_graph(str(FIXTURES / "home.json"))


@pytest.fixture
def autorace_graph():
    from interlock.graph_model import load_graph

    return load_graph(str(FIXTURES / "autorace.json"))
