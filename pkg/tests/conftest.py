import json
from pathlib import Path

import pytest

from anomalylens.config import CEILING_ENV, HOME_ENV

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_cases():
    """(stem, schedule text, expected sidecar) for every shipped .sched file."""
    cases = []
    for path in sorted(FIXTURES.glob("*.sched")):
        expected = json.loads(path.with_suffix(".expected.json").read_text(encoding="utf-8"))
        cases.append((path.stem, path.read_text(encoding="utf-8"), expected))
    return cases


def load_catalog(which: str):
    return json.loads((FIXTURES / f"catalog_{which}.json").read_text(encoding="utf-8"))


@pytest.fixture(autouse=True)
def isolated_home(tmp_path, monkeypatch):
    """Keep config and the SQLite log out of the real home directory."""
    home = tmp_path / "home"
    monkeypatch.setenv(HOME_ENV, str(home))
    monkeypatch.delenv(CEILING_ENV, raising=False)
    return home
