import pytest

from formnav.core import ScenarioConfig


@pytest.fixture
def default_scenario():
    return ScenarioConfig()
