from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS_DIR))

from icdforge.xmlio import parse_icd  # noqa: E402

FIXTURES = TESTS_DIR / "fixtures"


def load_fixture(name: str) -> bytes:
    return (FIXTURES / name).read_bytes()


@pytest.fixture(scope="session")
def fccn_bytes() -> bytes:
    return load_fixture("fccn.xml")


@pytest.fixture(scope="session")
def fccn_doc(fccn_bytes):
    result = parse_icd(fccn_bytes)
    assert result.ok and not result.issues, [str(i) for i in result.issues]
    return result.document


@pytest.fixture(scope="session")
def mixed_bytes() -> bytes:
    return load_fixture("mixed.xml")


@pytest.fixture(scope="session")
def mixed_doc(mixed_bytes):
    result = parse_icd(mixed_bytes)
    assert result.ok and not result.issues, [str(i) for i in result.issues]
    return result.document


@pytest.fixture()
def fixtures_dir() -> Path:
    return FIXTURES
