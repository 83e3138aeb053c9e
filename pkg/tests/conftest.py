import pytest

from helpers import build_tiny_world


@pytest.fixture
def tiny_world():
    return build_tiny_world()
