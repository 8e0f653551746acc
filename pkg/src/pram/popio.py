"""File formats: population JSON, schema JSON, individual-record CSV.

Population file layout::

    {
      "sites": ["adams", "home"],
      "schema": {"features": ["flu", "mood"], "relations": ["has_location"]},
      "groups": [
        {"features": {"flu": "s", "mood": "happy"},
         "relations": {"has_location": "adams"},
         "mass": 900.0}
      ]
    }

Masses are decimal literals; groups with equal signatures are merged on load
with their masses summed.  Saving emits sorted keys and canonically ordered
groups, so save(load(x)) is a stable fixed point.

Schema file layout: ``{"features": [...], "relations": [...], "sites": [...]}``.
Record CSV: a header row of attribute names, one row per individual.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Mapping, Sequence

from .core import Group, GroupSignature, ModelSchema, Population
from .errors import SchemaError

__all__ = [
    "load_population",
    "save_population",
    "population_from_dict",
    "population_to_dict",
    "load_schema",
    "schema_from_dict",
    "load_records",
    "read_records",
]


def _require(mapping: Mapping, key: str, kind, where: str):
    if not isinstance(mapping, Mapping):
        raise SchemaError(f"{where} must be an object, got {type(mapping).__name__}")
    if key not in mapping:
        raise SchemaError(f"{where} is missing {key!r}")
    value = mapping[key]
    if not isinstance(value, kind):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise SchemaError(f"{where}: {key!r} must be {names}, got {type(value).__name__}")
    return value


def _string_list(value, where: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{where} must be a list of strings")
    return tuple(value)


def _string_map(value, where: str) -> dict[str, str]:
    if not isinstance(value, Mapping) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in value.items()
    ):
        raise SchemaError(f"{where} must map strings to strings")
    return dict(value)


def schema_from_dict(data: Mapping) -> ModelSchema:
    features = _string_list(_require(data, "features", list, "schema"), "schema features")
    relations = _string_list(_require(data, "relations", list, "schema"), "schema relations")
    sites = _string_list(data.get("sites", []), "schema sites")
    return ModelSchema(features=features, relations=relations, sites=sites)


def load_schema(path: str | Path) -> ModelSchema:
    return schema_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def population_from_dict(data: Mapping) -> Population:
    sites = _string_list(_require(data, "sites", list, "population"), "sites")
    schema_obj = _require(data, "schema", Mapping, "population")
    features = _string_list(_require(schema_obj, "features", list, "schema"), "schema features")
    relations = _string_list(_require(schema_obj, "relations", list, "schema"), "schema relations")
    schema = ModelSchema(features=features, relations=relations, sites=sites)

    raw_groups = _require(data, "groups", list, "population")
    groups = []
    for i, entry in enumerate(raw_groups):
        where = f"groups[{i}]"
        feats = _string_map(_require(entry, "features", Mapping, where), f"{where}.features")
        rels = _string_map(_require(entry, "relations", Mapping, where), f"{where}.relations")
        mass = _require(entry, "mass", (int, float), where)
        if isinstance(mass, bool):
            raise SchemaError(f"{where}: 'mass' must be a number")
        groups.append(Group(GroupSignature(feats, rels), float(mass)))
    return Population(schema, groups, sites=sites)


def load_population(path: str | Path) -> Population:
    return population_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def population_to_dict(pop: Population) -> dict:
    return {
        "sites": list(pop.sites),
        "schema": {
            "features": sorted(pop.schema.features),
            "relations": sorted(pop.schema.relations),
        },
        "groups": [
            {
                "features": dict(sorted(g.signature.features.items())),
                "relations": dict(sorted(g.signature.relations.items())),
                "mass": g.mass,
            }
            for g in pop.groups
        ],
    }


def save_population(pop: Population, path: str | Path) -> None:
    text = json.dumps(population_to_dict(pop), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_records(text: str) -> list[dict[str, str]]:
    """Parse individual records from CSV text (header row of attribute
    names, one row per individual).  Empty rows are skipped."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise SchemaError("record CSV has no header row")
    records = []
    for row in reader:
        if all(v is None or v == "" for v in row.values()):
            continue
        records.append({k: (v if v is not None else "") for k, v in row.items() if k is not None})
    return records


def load_records(path: str | Path) -> list[dict[str, str]]:
    return read_records(Path(path).read_text(encoding="utf-8"))
