import json
from pathlib import Path

import pytest

from fabula.mock import MockModelBackends
from fabula.session import StoryEngine

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def mary_script() -> dict:
    return json.loads((DATA_DIR / "mary_actions.json").read_text(encoding="utf-8"))


@pytest.fixture
def keyword_fixture() -> list[dict]:
    return json.loads((DATA_DIR / "keyword_fixture.json").read_text(encoding="utf-8"))


@pytest.fixture
def mock_backends() -> MockModelBackends:
    return MockModelBackends(seed=42)


@pytest.fixture
def engine(mock_backends) -> StoryEngine:
    return StoryEngine(mock_backends)
