"""Command-line front end.

Subcommands:

* ``pram run --config run.toml [--plot out.svg] [--prune-epsilon X]`` —
  simulate and write a trajectory CSV (and optionally an SVG chart).
* ``pram validate --rules R --schema S`` — parse and statically check rules.
* ``pram inspect --population P`` — summarize a population file.
* ``pram compile --records CSV --schema S --rules R --out P`` — collapse
  individual records into a grouped population.

The run config is TOML: ``population``, ``rules``, ``iterations`` are
required; ``schema``, ``output``, ``plot``, ``prune_epsilon`` and a
``[[probes]]`` array (name/site/relation/where) are optional.  Paths are
resolved relative to the config file.  Command-line flags override their
config counterparts.  Exit status is 0 on success and 1 on any error;
engine failures still flush the trajectory computed so far.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .compiler import compile_population
from .core import ModelSchema, Population
from .engine import Probe, Trajectory, run
from .errors import PramError, RunError, SchemaError, ValidationError
from .parser import parse_rules
from .popio import (
    load_population,
    load_records,
    load_schema,
    save_population,
)
from .rules import validate_ruleset
from .svg import plot_trajectory

__all__ = ["main"]


def _err(message: str) -> None:
    print(f"pram: error: {message}", file=sys.stderr)


def _log(message: str) -> None:
    print(f"pram: {message}", file=sys.stderr)


def _check_schema_file(schema: ModelSchema, pop: Population) -> None:
    if set(schema.features) != set(pop.schema.features) or set(schema.relations) != set(
        pop.schema.relations
    ):
        raise SchemaError("population attributes do not match the schema file")
    unknown = set(pop.sites) - set(schema.sites)
    if unknown:
        raise SchemaError(f"population registers sites missing from the schema file: {sorted(unknown)}")


def _load_config(path: Path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _config_probes(raw) -> list[Probe]:
    probes = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ValidationError(f"probes[{i}] must be a table")
        try:
            name, site, relation = entry["name"], entry["site"], entry["relation"]
        except KeyError as missing:
            raise ValidationError(f"probes[{i}] is missing {missing.args[0]!r}") from None
        where = entry.get("where", {})
        if not isinstance(where, dict):
            raise ValidationError(f"probes[{i}].where must be a table")
        probes.append(Probe(name, site, relation, tuple(where.items())))
    return probes


def _positive_iterations(value) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValidationError(f"iterations must be a positive integer, got {value!r}")
    return value


def cmd_run(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    try:
        config = _load_config(config_path)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        _err(f"cannot read config {config_path}: {exc}")
        return 1

    base = config_path.parent

    def resolved(key: str) -> Path | None:
        value = config.get(key)
        return base / value if value is not None else None

    try:
        for key in ("population", "rules", "iterations"):
            if key not in config:
                raise ValidationError(f"config is missing {key!r}")
        iterations = _positive_iterations(config["iterations"])
        pop = load_population(resolved("population"))
        schema_path = resolved("schema")
        if schema_path is not None:
            _check_schema_file(load_schema(schema_path), pop)
        rules = parse_rules(Path(resolved("rules")).read_text(encoding="utf-8"), pop.schema)
        probes = _config_probes(config.get("probes", []))

        prune = args.prune_epsilon if args.prune_epsilon is not None else config.get("prune_epsilon")
        if prune is not None:
            prune = float(prune)
            if prune < 0:
                raise ValidationError(f"prune epsilon must be non-negative, got {prune}")

        out_path = Path(args.output) if args.output else resolved("output")
        plot_path = Path(args.plot) if args.plot else resolved("plot")
    except (PramError, OSError) as exc:
        _err(str(exc))
        return 1

    def emit(trajectory: Trajectory) -> None:
        if out_path is None:
            sys.stdout.write(trajectory.to_csv())
        else:
            trajectory.write_csv(out_path)
            _log(f"wrote {out_path}")

    try:
        trajectory = run(
            pop,
            rules,
            iterations,
            probes,
            prune_epsilon=prune,
            on_iteration=lambda p: _log(f"iteration {p.iteration}: nu={p.nu}"),
        )
    except RunError as exc:
        _err(str(exc))
        if exc.trajectory is not None and len(exc.trajectory):
            emit(exc.trajectory)
        return 1

    emit(trajectory)
    if plot_path is not None:
        plot_trajectory(trajectory, plot_path, title=config.get("title", ""))
        _log(f"wrote {plot_path}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        schema = load_schema(args.schema) if args.schema else None
        rules = parse_rules(Path(args.rules).read_text(encoding="utf-8"), schema)
    except (PramError, OSError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return 1
    diagnostics = validate_ruleset(rules, schema)
    for diag in diagnostics:
        print(f"{args.rules}:{diag}", file=sys.stderr)
    warnings = sum(1 for d in diagnostics if d.severity == "warning")
    _log(f"{len(rules)} rule(s), {warnings} warning(s)")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    try:
        pop = load_population(args.population)
    except (PramError, OSError, ValueError) as exc:
        _err(str(exc))
        return 1

    schema = pop.schema
    print(f"nu:         {pop.nu}")
    print(f"total mass: {pop.total_mass():.12g}")
    print(f"iteration:  {pop.iteration}")
    print(f"features:   {', '.join(sorted(schema.features)) or '(none)'}")
    print(f"relations:  {', '.join(sorted(schema.relations)) or '(none)'}")
    print(f"sites:      {', '.join(pop.sites) or '(none)'}")
    print()

    feature_names = sorted(schema.features)
    relation_names = sorted(schema.relations)
    header = [*relation_names, *feature_names, "mass"]
    table = [header]
    for g in pop.groups:
        row = [g.signature.relation(r) for r in relation_names]
        row += [g.signature.feature(f) for f in feature_names]
        row.append(f"{g.mass:.12g}")
        table.append(row)
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    for row in table:
        cells = [c.ljust(w) for c, w in zip(row[:-1], widths)]
        cells.append(row[-1].rjust(widths[-1]))
        print("  ".join(cells).rstrip())

    if relation_names and pop.groups:
        print()
        print("mass per site:")
        for relation in relation_names:
            for site in pop.sites:
                print(f"  {relation} = {site}: {pop.mass_at_site(site, relation):.12g}")
    return 0


def cmd_compile(args: argparse.Namespace) -> int:
    try:
        schema = load_schema(args.schema)
        rules = parse_rules(Path(args.rules).read_text(encoding="utf-8"), schema)
        records = load_records(args.records)
        pop = compile_population(records, rules, schema)
        save_population(pop, args.out)
    except (PramError, OSError) as exc:
        _err(str(exc))
        return 1
    _log(f"compiled {len(records)} record(s) into {pop.nu} group(s), total mass {pop.total_mass():.12g}")
    _log(f"wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pram",
        description="Group-based probabilistic simulation: run models, validate rules, "
        "inspect and compile populations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a model described by a TOML config")
    p_run.add_argument("--config", required=True, help="run configuration (TOML)")
    p_run.add_argument("--plot", help="write an SVG chart of the probe series")
    p_run.add_argument("--output", help="trajectory CSV path (overrides the config)")
    p_run.add_argument(
        "--prune-epsilon",
        type=float,
        default=None,
        help="drop groups with mass below this after each iteration",
    )
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="parse rules and report diagnostics")
    p_val.add_argument("--rules", required=True, help="rule DSL source file")
    p_val.add_argument("--schema", help="schema JSON to resolve attribute names against")
    p_val.set_defaults(func=cmd_validate)

    p_ins = sub.add_parser("inspect", help="summarize a population file")
    p_ins.add_argument("--population", required=True, help="population JSON file")
    p_ins.set_defaults(func=cmd_inspect)

    p_com = sub.add_parser("compile", help="group individual records by rule-relevant attributes")
    p_com.add_argument("--records", required=True, help="individual records (CSV with header)")
    p_com.add_argument("--schema", required=True, help="schema JSON declaring attribute kinds")
    p_com.add_argument("--rules", required=True, help="rule DSL source file")
    p_com.add_argument("--out", required=True, help="output population JSON path")
    p_com.set_defaults(func=cmd_compile)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
