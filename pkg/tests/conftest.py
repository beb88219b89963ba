import json
from pathlib import Path

import pytest

from aasforge.dictionary_index import FingerprintIndex, load_dictionary
from aasforge.llm_gateway import StubProvider

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def datasheet_text() -> str:
    return (FIXTURES / "datasheet.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def stub_script() -> dict:
    return json.loads((FIXTURES / "stub_script.json").read_text(encoding="utf-8"))


@pytest.fixture()
def stub_provider(stub_script) -> StubProvider:
    return StubProvider.from_script(stub_script)


@pytest.fixture()
def dictionary_entries():
    return load_dictionary(FIXTURES / "dictionary.jsonl")


@pytest.fixture()
def fingerprint_index(dictionary_entries, stub_provider) -> FingerprintIndex:
    return FingerprintIndex.build(dictionary_entries, stub_provider.embed)
