from typing import List
import json

import jsons

from relaycov.domain.scenario import ScenarioConfig
from relaycov.domain.metrics.records import RoundRecord, ExperimentSummary


def load_scenario_json_str(json_str: str) -> ScenarioConfig:
    return ScenarioConfig.parse_raw(json_str)


def dump_scenario_json(config: ScenarioConfig) -> str:
    return json.dumps(config.dict(), indent=2)


def dump_records_json(records: List[RoundRecord]) -> str:
    return jsons.dumps(records, strip_privates=True, strip_properties=True, strip_class_variables=True)


def load_records_json(json_str: str) -> List[RoundRecord]:
    return [RoundRecord(**entry) for entry in jsons.loads(json_str)]


def dump_summary_json(summary: ExperimentSummary) -> str:
    return jsons.dumps(summary, strip_privates=True, strip_properties=True, strip_class_variables=True)
