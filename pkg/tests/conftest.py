from __future__ import annotations

import os

import pytest

from lcer.syntax import parse_theory

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def load_fixture(name: str):
    with open(os.path.join(FIXTURES, name), encoding="utf-8") as fh:
        return fh.read()


def load_theory(name: str):
    return parse_theory(load_fixture(name))


@pytest.fixture(scope="session")
def mod12():
    return load_theory("mod12.th")


@pytest.fixture(scope="session")
def group():
    return load_theory("group.th")


@pytest.fixture(scope="session")
def lists():
    return load_theory("lists.th")


@pytest.fixture(scope="session")
def absmax():
    return load_theory("absmax.th")


@pytest.fixture(scope="session")
def nneg():
    return load_theory("nneg.th")


@pytest.fixture(scope="session")
def splitabst():
    return load_theory("splitabst.th")


@pytest.fixture(scope="session")
def refute_bool():
    return load_theory("refute_bool.th")


@pytest.fixture(scope="session")
def inconsistent():
    return load_theory("inconsistent.th")
