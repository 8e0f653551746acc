"""Compile individual-level records into a grouped population.

Two records are functionally identical when they agree on every attribute
some rule queries or changes; nothing else can influence the dynamics.  The
compiler projects each record onto that relevance set, counts records per
projected signature, and emits one group per equivalence class with mass =
record count.  Irrelevant attributes are dropped from the output schema
entirely, not just from the grouping key, so populations built by hand and
by compilation compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import Group, GroupSignature, ModelSchema, Population
from .errors import SchemaError
from .rules import RuleSet, referenced_attribute_names

__all__ = ["RelevanceSet", "relevant_attributes", "compile_population"]


@dataclass(frozen=True)
class RelevanceSet:
    """The attribute names some rule queries or changes."""

    features: frozenset[str]
    relations: frozenset[str]

    def __contains__(self, name: str) -> bool:
        return name in self.features or name in self.relations


def relevant_attributes(rules: RuleSet, schema: ModelSchema | None = None) -> RelevanceSet:
    """Attributes appearing in rule conditions, proportion queries (the
    relation argument and predicate features), or action targets; rel()
    sources count as queried.

    Condition tests are syntactically ambiguous between features and
    relations, so a schema (given here or attached to the ruleset) is needed
    to classify them; names the schema does not know raise SchemaError.
    """
    features, relations, untyped = referenced_attribute_names(rules)
    schema = schema if schema is not None else rules.schema
    if schema is not None:
        for name in sorted(features):
            if name not in schema.features:
                raise SchemaError(f"rules use {name!r} as a feature, but the schema does not list it")
        for name in sorted(relations):
            if name not in schema.relations:
                raise SchemaError(f"rules use {name!r} as a relation, but the schema does not list it")
        typed_features, typed_relations = set(features), set(relations)
        for name in sorted(untyped):
            kind = schema.kind_of(name)
            if kind == "feature":
                typed_features.add(name)
            elif kind == "relation":
                typed_relations.add(name)
            else:
                raise SchemaError(f"rules reference {name!r}, which the schema does not declare")
        return RelevanceSet(frozenset(typed_features), frozenset(typed_relations))
    if untyped:
        names = ", ".join(repr(n) for n in sorted(untyped))
        raise SchemaError(f"cannot classify condition attributes without a schema: {names}")
    return RelevanceSet(features, relations)


def compile_population(
    records: Sequence[Mapping[str, str]],
    rules: RuleSet,
    schema: ModelSchema,
) -> Population:
    """Collapse individual records into groups of functionally identical
    agents.

    Every record is projected onto ``relevant_attributes(rules)`` and the
    projections are counted, so the compiled total mass equals the record
    count exactly.  Attribute columns no rule references are ignored; a
    record lacking a relevant attribute (or relating to an unregistered
    site) raises SchemaError naming the record index.
    """
    relevance = relevant_attributes(rules, schema)
    out_schema = ModelSchema(
        features=tuple(sorted(relevance.features)),
        relations=tuple(sorted(relevance.relations)),
        sites=schema.sites,
    )

    counts: dict[GroupSignature, int] = {}
    for i, record in enumerate(records):
        feats: dict[str, str] = {}
        rels: dict[str, str] = {}
        for name in out_schema.features:
            value = record.get(name)
            if value is None or value == "":
                raise SchemaError(f"record {i} is missing relevant feature {name!r}")
            feats[name] = value
        for name in out_schema.relations:
            value = record.get(name)
            if value is None or value == "":
                raise SchemaError(f"record {i} is missing relevant relation {name!r}")
            if value not in schema.sites:
                raise SchemaError(f"record {i}: relation {name!r} targets unknown site {value!r}")
            rels[name] = value
        sig = GroupSignature(feats, rels)
        counts[sig] = counts.get(sig, 0) + 1

    groups = (Group(sig, float(n)) for sig, n in counts.items())
    return Population(out_schema, groups, sites=schema.sites)
