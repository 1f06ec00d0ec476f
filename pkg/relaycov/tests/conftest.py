import pytest
from importlib.resources import read_text
from typing import Dict
import json

from relaycov.adapters.json import load_scenario_json_str
from relaycov.domain.model import NavGraph
from relaycov.domain.scenario import ScenarioConfig, build_navgraph
from relaycov.tests.graph_helpers import make_graph, symmetric_costs


def get_config_from_file(filename: str) -> ScenarioConfig:
    file_data = read_text("relaycov.tests.scenario_test_data", filename)
    return load_scenario_json_str(file_data)


def get_data_from_file(filename: str) -> Dict:
    file_data = read_text("relaycov.tests.scenario_test_data", filename)
    return json.loads(file_data)


@pytest.fixture
def tiny() -> ScenarioConfig:
    return get_config_from_file("tiny.json")


@pytest.fixture
def tiny_four_neighbour() -> ScenarioConfig:
    return get_config_from_file("tiny_four_neighbour.json")


@pytest.fixture
def corridor() -> ScenarioConfig:
    return get_config_from_file("corridor.json")


@pytest.fixture
def robustness() -> ScenarioConfig:
    return get_config_from_file("robustness.json")


@pytest.fixture
def two_targets() -> ScenarioConfig:
    return get_config_from_file("two_targets.json")


@pytest.fixture
def random_layout() -> ScenarioConfig:
    return get_config_from_file("random_layout.json")


@pytest.fixture
def reference() -> ScenarioConfig:
    return load_scenario_json_str(read_text("relaycov.scenarios", "reference.json"))


@pytest.fixture
def tiny_graph(tiny) -> NavGraph:
    return build_navgraph(tiny)


@pytest.fixture
def four_neighbour_graph(tiny_four_neighbour) -> NavGraph:
    return build_navgraph(tiny_four_neighbour)


@pytest.fixture
def corridor_graph(corridor) -> NavGraph:
    return build_navgraph(corridor)


@pytest.fixture
def diamond_data() -> Dict:
    return get_data_from_file("diamond.json")


@pytest.fixture
def diamond(diamond_data) -> NavGraph:
    return make_graph(diamond_data["positions"], [(src, dst) for src, dst, _ in diamond_data["costs"]])


@pytest.fixture
def diamond_costs(diamond_data):
    return symmetric_costs(diamond_data["costs"])
