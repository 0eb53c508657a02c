from pathlib import Path

import pytest

from mutrobust import load_suite, parse_tree

CORPUS = Path(__file__).resolve().parent.parent / "corpus" / "sorting"
SORTER_NAMES = ("bubble", "insertion", "merge", "quick")


def corpus_source(name: str) -> str:
    return (CORPUS / f"{name}.mini").read_text()


@pytest.fixture(scope="session")
def suite():
    return load_suite(CORPUS / "tests")


@pytest.fixture(scope="session")
def basic_suite():
    return load_suite(CORPUS / "tests-basic")


@pytest.fixture(scope="session")
def sorters():
    return {name: parse_tree(corpus_source(name)) for name in SORTER_NAMES}


@pytest.fixture(scope="session")
def bubble(sorters):
    return sorters["bubble"]


@pytest.fixture(scope="session")
def insertion(sorters):
    return sorters["insertion"]
