"""
Shared fixtures: the shipped presets.
"""

import pytest

from ifs_khintchine.config import load_preset


@pytest.fixture
def cantor3():
    return load_preset("cantor3")


@pytest.fixture
def ex21():
    return load_preset("ex21")


@pytest.fixture
def ex22():
    return load_preset("ex22")


@pytest.fixture
def cf12():
    return load_preset("cf12")


@pytest.fixture
def overlap_demo():
    return load_preset("overlap_demo")
