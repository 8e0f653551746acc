"""Group-based population simulation driven by probabilistic rules.

Agents that share every attribute some rule can see are interchangeable, so
a population is stored as groups: a signature of discrete features plus
site-valued relations, and a real mass counting the agents it stands for.
Rules written in a small DSL probabilistically rewrite signatures; the
engine applies all rules to all groups against a frozen snapshot and then
redistributes mass in one deterministic, conserving sweep per iteration.
Runtime scales with the number of groups, not the number of agents.

Typical use::

    import pram

    pop = pram.load_population(pram.model_path("two_group.json"))
    rules = pram.parse_rules(pram.model_path("two_group.rules").read_text(), pop.schema)
    trajectory = pram.run(pop, rules, 10, probes=[
        pram.Probe("exposed", "adams", "has_location", (("flu", "e"),)),
    ])
    print(trajectory.to_csv())
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .compiler import RelevanceSet, compile_population, relevant_attributes
from .core import (
    Group,
    GroupSignature,
    ModelSchema,
    Population,
    RelationLookup,
    SetFeature,
    SetRelation,
    SiteLiteral,
    apply_actions,
    apply_joint_actions,
    signature_equal,
)
from .engine import (
    PotentialGroup,
    Probe,
    Trajectory,
    apply_rules_to_group,
    redistribute,
    run,
    step,
)
from .errors import (
    ActionConflictError,
    EmptySiteError,
    ParseError,
    PramError,
    ProbabilityRangeError,
    ProbabilitySumError,
    RunError,
    SchemaError,
    UnknownSiteError,
    ValidationError,
)
from .parser import format_rules, parse_rules
from .popio import (
    load_population,
    load_records,
    load_schema,
    population_from_dict,
    population_to_dict,
    read_records,
    save_population,
    schema_from_dict,
)
from .rules import (
    Branch,
    Diagnostic,
    Rule,
    RuleClause,
    RuleSet,
    Test,
    evaluate_rule,
    validate_ruleset,
)
from .svg import plot_trajectory, render_line_chart

__version__ = "0.1.0"

__all__ = [
    "ActionConflictError",
    "Branch",
    "Diagnostic",
    "EmptySiteError",
    "Group",
    "GroupSignature",
    "ModelSchema",
    "ParseError",
    "Population",
    "PotentialGroup",
    "PramError",
    "ProbabilityRangeError",
    "ProbabilitySumError",
    "Probe",
    "RelationLookup",
    "RelevanceSet",
    "Rule",
    "RuleClause",
    "RuleSet",
    "RunError",
    "SchemaError",
    "SetFeature",
    "SetRelation",
    "SiteLiteral",
    "Test",
    "Trajectory",
    "UnknownSiteError",
    "ValidationError",
    "apply_actions",
    "apply_joint_actions",
    "apply_rules_to_group",
    "compile_population",
    "evaluate_rule",
    "format_rules",
    "load_population",
    "load_records",
    "load_schema",
    "model_path",
    "parse_rules",
    "plot_trajectory",
    "population_from_dict",
    "population_to_dict",
    "read_records",
    "redistribute",
    "relevant_attributes",
    "render_line_chart",
    "run",
    "save_population",
    "schema_from_dict",
    "signature_equal",
    "step",
    "validate_ruleset",
]


def model_path(name: str) -> Path:
    """Path to one of the bundled example models (rules, populations,
    schemas, run configs under ``pram/models``)."""
    path = Path(str(resources.files("pram.models").joinpath(name)))
    if not path.exists():
        raise FileNotFoundError(f"no bundled model named {name!r}")
    return path
