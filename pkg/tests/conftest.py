from __future__ import annotations

import pytest

import pram

# One line per acceptance criterion, echoed after the run so the measured
# numbers are visible even when every test passes.
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def two_group_pop() -> pram.Population:
    return pram.load_population(pram.model_path("two_group.json"))


@pytest.fixture(scope="session")
def two_group_rules(two_group_pop) -> pram.RuleSet:
    text = pram.model_path("two_group.rules").read_text(encoding="utf-8")
    return pram.parse_rules(text, two_group_pop.schema)


@pytest.fixture(scope="session")
def two_school_pop() -> pram.Population:
    return pram.load_population(pram.model_path("two_school.json"))


@pytest.fixture(scope="session")
def flu_rules(two_school_pop) -> pram.RuleSet:
    text = pram.model_path("flu.rules").read_text(encoding="utf-8")
    return pram.parse_rules(text, two_school_pop.schema)


@pytest.fixture(scope="session")
def flu_schema() -> pram.ModelSchema:
    return pram.load_schema(pram.model_path("flu_schema.json"))


SCHOOL_PROBES = (
    pram.Probe("exposed_adams", "adams", "has_school", (("flu", "e"),)),
    pram.Probe("exposed_berry", "berry", "has_school", (("flu", "e"),)),
    pram.Probe("exposed_at_adams", "adams", "has_location", (("flu", "e"),)),
    pram.Probe("exposed_at_berry", "berry", "has_location", (("flu", "e"),)),
)


@pytest.fixture(scope="session")
def two_school_run(two_school_pop, flu_rules) -> pram.Trajectory:
    """The 100-iteration two-school trajectory shared by several tests."""
    return pram.run(two_school_pop, flu_rules, 100, SCHOOL_PROBES)
