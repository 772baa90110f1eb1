from __future__ import annotations

import pytest

from unsafe_props.config import packaged_data_path
from unsafe_props.cvebench import load_cves
from unsafe_props.docstore import load_database
from unsafe_props.taxonomy import load_catalog


@pytest.fixture(scope="session")
def catalog_text() -> str:
    return packaged_data_path("catalog.toml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def seed_db_text() -> str:
    return packaged_data_path("seed_db.toml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def seed_cves_text() -> str:
    return packaged_data_path("seed_cves.toml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def catalog(catalog_text):
    return load_catalog(catalog_text)


@pytest.fixture(scope="session")
def seed_db(catalog, seed_db_text):
    return load_database(seed_db_text, catalog)


@pytest.fixture(scope="session")
def seed_cves(catalog, seed_cves_text):
    return load_cves(seed_cves_text, catalog)


@pytest.fixture(scope="session")
def fixture_corpus():
    return packaged_data_path("scan_fixture")
