"""Simulation engine: joint rule application and mass redistribution.

Each iteration runs against a frozen snapshot of the population:

1. Every extant group is offered to every rule.  The rules that return a
   distribution for a group are combined by cartesian product, so one source
   group spawns one potential group per joint branch choice, with mass =
   source mass multiplied by the chosen branch probabilities.  A group no
   rule applies to is untouched.
2. Touched groups have their mass zeroed.
3. Potential masses are merged by target signature and reconciled with the
   extant set: matching signatures absorb the mass, unmatched signatures
   become new extant groups.  Zeroed groups that receive nothing remain
   extant with mass 0 unless pruning is enabled.

All floating-point reductions happen in a canonical order (rule name for the
product, then target signature and source signature for the merge), so runs
are bitwise reproducible whatever the input ordering or thread count.
Parallel rule application is capped by the PRAM_THREADS environment variable
and defaults to the machine's CPU count; populations below a small threshold
are processed serially because thread startup would dominate.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .core import Group, GroupSignature, Population, apply_joint_actions
from .errors import PramError, RunError, ValidationError
from .rules import Distribution, RuleSet, evaluate_rule

__all__ = [
    "PotentialGroup",
    "Probe",
    "Trajectory",
    "apply_rules_to_group",
    "redistribute",
    "step",
    "run",
]

# Below this many groups a step runs serially even when threads are allowed.
_PARALLEL_THRESHOLD = 64


@dataclass(frozen=True)
class PotentialGroup:
    """A candidate (signature, mass) awaiting redistribution.

    ``provenance`` records the spawning group's signature.  It breaks ties in
    the canonical merge order and aids debugging; it carries no semantics.
    """

    signature: GroupSignature
    mass: float
    provenance: GroupSignature


def apply_rules_to_group(
    rules: RuleSet, group: Group, snapshot: Population
) -> tuple[PotentialGroup, ...]:
    """All potential groups that ``group`` spawns under ``rules``.

    Applicable rules act jointly: their distributions are combined by
    cartesian product with probabilities multiplied, and each joint action
    list is applied to the source signature in one shot (so rel() lookups
    read the pre-update state).  Returns () when no rule applies.

    Joint branch choices that land on the same signature are summed here,
    which keeps at most one potential per (target, source) pair.

    Raises ActionConflictError when two rules set one attribute to different
    values in the same joint choice; evaluation errors propagate.
    """
    applicable: list[tuple[str, Distribution]] = []
    for rule in rules:
        dist = evaluate_rule(rule, group, snapshot)
        if dist is not None:
            applicable.append((rule.name, dist))
    if not applicable:
        return ()
    applicable.sort(key=lambda pair: pair[0])

    merged: dict[GroupSignature, float] = {}
    for combo in itertools.product(*(dist for _, dist in applicable)):
        mass = group.mass
        for probability, _ in combo:
            mass = mass * probability
        target = apply_joint_actions(group.signature, [actions for _, actions in combo])
        merged[target] = merged.get(target, 0.0) + mass
    source = group.signature
    return tuple(PotentialGroup(sig, m, source) for sig, m in merged.items())


def redistribute(
    pop: Population,
    potentials: Iterable[PotentialGroup],
    touched: Iterable[GroupSignature],
    prune_epsilon: float | None = None,
) -> Population:
    """Fold one iteration's potential groups back into the population.

    Potential masses are first merged by target signature, accumulating in
    (target, provenance) order so the reduction is canonical, then reconciled
    with the extant set: touched groups restart from zero, untouched groups
    keep their mass, and merged potential mass is added where signatures
    match or promoted to a new extant group where they do not.

    When ``prune_epsilon`` is given, groups with mass strictly below it are
    dropped from the result; by default every group survives, including ones
    left at mass 0.
    """
    merged: dict[GroupSignature, float] = {}
    for pot in sorted(potentials, key=lambda p: (p.signature.sort_key, p.provenance.sort_key)):
        merged[pot.signature] = merged.get(pot.signature, 0.0) + pot.mass

    zeroed = set(touched)
    masses: dict[GroupSignature, float] = {}
    for g in pop.groups:
        base = 0.0 if g.signature in zeroed else g.mass
        masses[g.signature] = base + merged.pop(g.signature, 0.0)
    masses.update(merged)

    groups: Iterable[Group] = (Group(sig, m) for sig, m in masses.items())
    if prune_epsilon is not None:
        groups = (g for g in groups if not g.mass < prune_epsilon)
    return Population(pop.schema, groups, pop.sites, pop.iteration + 1)


def _thread_cap() -> int:
    raw = os.environ.get("PRAM_THREADS", "").strip()
    machine = os.cpu_count() or 1
    if not raw:
        return machine
    cap = int(raw)
    return max(1, min(cap, machine))


def step(pop: Population, rules: RuleSet, prune_epsilon: float | None = None) -> Population:
    """Advance the population one iteration.

    Rules see ``pop`` as an immutable snapshot: every group's potentials are
    generated against the start-of-iteration state, and only then does a
    single redistribute reconcile them, so within-iteration ordering cannot
    leak into the result.
    """
    workers = _thread_cap()
    if workers > 1 and len(pop.groups) >= _PARALLEL_THRESHOLD:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            spawned = list(pool.map(lambda g: apply_rules_to_group(rules, g, pop), pop.groups))
    else:
        spawned = [apply_rules_to_group(rules, g, pop) for g in pop.groups]

    potentials: list[PotentialGroup] = []
    touched: list[GroupSignature] = []
    for group, pots in zip(pop.groups, spawned):
        if pots:
            touched.append(group.signature)
            potentials.extend(pots)
    return redistribute(pop, potentials, touched, prune_epsilon)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Probe:
    """A named per-iteration observation: the mass proportion at ``site``
    (reached via ``relation``) whose features satisfy every (name, value)
    pair in ``where``."""

    name: str
    site: str
    relation: str
    where: tuple[tuple[str, str], ...] = ()

    def value(self, pop: Population) -> float:
        return pop.proportion_at_site(self.site, self.relation, self.where)


def _format_cell(value) -> str:
    if isinstance(value, int):
        return str(value)
    return format(value, ".12g")


@dataclass(frozen=True)
class Trajectory:
    """Per-iteration observations: iteration index, total mass, the number
    of extant groups, then one column per probe."""

    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> tuple[float, ...]:
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise KeyError(name) from None
        return tuple(row[idx] for row in self.rows)

    @property
    def probe_names(self) -> tuple[str, ...]:
        return self.columns[3:]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_format_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def _observe(pop: Population, probes: Sequence[Probe]) -> tuple[float, ...]:
    return (pop.iteration, pop.total_mass(), pop.nu, *(p.value(pop) for p in probes))


def run(
    pop: Population,
    rules: RuleSet,
    iterations: int,
    probes: Sequence[Probe] = (),
    prune_epsilon: float | None = None,
    on_iteration: Callable[[Population], None] | None = None,
) -> Trajectory:
    """Step ``iterations`` times, recording the initial state and every
    subsequent one.

    ``on_iteration`` is called with each recorded population (the initial
    one included), letting callers log progress.  If evaluation fails mid
    run, a RunError carrying the trajectory up to the failure is raised so
    partial results are never lost.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    names = [p.name for p in probes]
    if len(set(names)) != len(names):
        dupe = next(n for n in names if names.count(n) > 1)
        raise ValidationError(f"duplicate probe name {dupe!r}")
    columns = ("iteration", "total_mass", "nu", *names)

    rows: list[tuple[float, ...]] = []
    current = pop
    try:
        rows.append(_observe(current, probes))
        if on_iteration is not None:
            on_iteration(current)
        for _ in range(iterations):
            current = step(current, rules, prune_epsilon)
            rows.append(_observe(current, probes))
            if on_iteration is not None:
                on_iteration(current)
    except PramError as exc:
        raise RunError(str(exc), Trajectory(columns, tuple(rows))) from exc
    return Trajectory(columns, tuple(rows))
