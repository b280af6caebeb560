import json
from pathlib import Path

import pytest

from dualresearch.config import Settings
from dualresearch.providers.mock import ScriptedProvider

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "fixtures" / "corpus"


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture
def mock_settings() -> Settings:
    return Settings(provider="mock", mock_dir=str(CORPUS), search_engine="mock")


def json_responder(mapping):
    """A scripted provider answering each task with a JSON-serialised value or callable."""

    def respond(request):
        value = mapping[request.task]
        if callable(value):
            value = value(request)
        return value if isinstance(value, str) else json.dumps(value)

    return ScriptedProvider(respond)


ACCEPTANCE: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
