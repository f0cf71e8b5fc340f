from .query import owns, query_as
from .script import (
    AssertionResult,
    ScenarioReport,
    ScenarioRunner,
    StepRecord,
    load_script,
    run_scenario,
)
