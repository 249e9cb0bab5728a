import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from insitu.dom_model import extract_interactables, parse_snapshot
from insitu.providers import ProviderSet

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def voyager_doc() -> dict:
    return json.loads((FIXTURES / "voyager_fields.snapshot.json").read_text())


@pytest.fixture(scope="session")
def voyager_snapshot(voyager_doc):
    return parse_snapshot(voyager_doc)


@pytest.fixture(scope="session")
def voyager_elements(voyager_snapshot):
    return extract_interactables(voyager_snapshot)


@pytest.fixture(scope="session")
def playground_snapshot():
    return parse_snapshot((FIXTURES / "playground.snapshot.json").read_text())


@pytest.fixture()
def providers() -> ProviderSet:
    return ProviderSet.offline()


@pytest.fixture(scope="session")
def golden_cases() -> list[dict]:
    return json.loads((FIXTURES / "golden_subtypes.json").read_text())["cases"]
