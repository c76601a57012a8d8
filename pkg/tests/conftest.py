"""Shared fixtures for the test suite."""
import pytest

from iimaid import fixtures


@pytest.fixture
def honesty():
    return fixtures.honesty_evaluation()


@pytest.fixture
def capability():
    return fixtures.capability_evaluation()


@pytest.fixture
def example1():
    return fixtures.evaluation_iimaid()


@pytest.fixture
def depth3():
    return fixtures.evaluation_depth3_stack()


@pytest.fixture
def ne_profile():
    return fixtures.ne_ii_profile()
