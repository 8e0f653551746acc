"""Rule representation and evaluation.

A rule is an ordered list of guarded clauses.  Each clause pairs an equality
condition with a distribution over conjunctive action lists; branch
probabilities may be dynamic expressions evaluated against the
start-of-iteration population snapshot.  Applying a rule to a group returns
the first matching clause's distribution, or ``None`` when no condition
holds — clauses are never blended, so overlapping conditions stay
deterministic (the validator flags statically detectable overlaps).

Rules are immutable after construction and evaluation never mutates the
snapshot, so one ruleset may be evaluated concurrently from many threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .core import (
    ActionList,
    Group,
    ModelSchema,
    Population,
    RelationLookup,
    SetFeature,
)
from .errors import (
    ProbabilityRangeError,
    ProbabilitySumError,
    SchemaError,
    ValidationError,
)

__all__ = [
    "SUM_TOLERANCE",
    "Test",
    "Literal",
    "Name",
    "BinOp",
    "Proportion",
    "Expr",
    "Branch",
    "RuleClause",
    "Rule",
    "RuleSet",
    "Distribution",
    "Diagnostic",
    "evaluate_rule",
    "validate_ruleset",
    "referenced_attribute_names",
]

# Evaluated branch probabilities must sum to 1 within this tolerance.
SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Test:
    """Equality test: feature-name == value or relation-name == site-name."""

    name: str
    value: str


@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class Name:
    """Reference to a let-bound name."""

    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-' or '*'
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Proportion:
    """proportion(relation, tests...): the mass fraction satisfying the
    feature tests among all groups at the evaluated group's related site."""

    relation: str
    predicate: tuple[Test, ...] = ()


Expr = Union[Literal, Name, BinOp, Proportion]


@dataclass(frozen=True)
class Branch:
    probability: Expr
    actions: ActionList
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.actions:
            raise ValidationError("branch must carry at least one action", *(self.pos or (None, None)))
        targets = [a.name for a in self.actions]
        if len(set(targets)) != len(targets):
            raise ValidationError(
                "two actions in one branch target the same attribute",
                *(self.pos or (None, None)),
            )


@dataclass(frozen=True)
class RuleClause:
    """A condition (empty = always true) plus at least one branch."""

    condition: tuple[Test, ...]
    branches: tuple[Branch, ...]
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.branches:
            raise ValidationError("clause must carry at least one branch", *(self.pos or (None, None)))


@dataclass(frozen=True)
class Rule:
    name: str
    lets: tuple[tuple[str, Expr], ...]
    clauses: tuple[RuleClause, ...]
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.clauses:
            raise ValidationError(f"rule {self.name!r} has no clauses", *(self.pos or (None, None)))
        let_names = [n for n, _ in self.lets]
        if len(set(let_names)) != len(let_names):
            raise ValidationError(f"duplicate let name in rule {self.name!r}", *(self.pos or (None, None)))


@dataclass(frozen=True)
class RuleSet:
    """An ordered collection of uniquely named rules.

    The bound schema, when present, is carried for convenience (the compiler
    and validator use it); it does not take part in equality so that a
    pretty-print/re-parse round trip compares equal.
    """

    rules: tuple[Rule, ...]
    schema: ModelSchema | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            dupe = next(n for n in names if names.count(n) > 1)
            raise ValidationError(f"duplicate rule name {dupe!r}")

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __getitem__(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)


# One clause's evaluated distribution: ((probability, actions), ...).
Distribution = tuple[tuple[float, ActionList], ...]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _eval_expr(expr: Expr, group: Group, snapshot: Population, env: dict[str, float]) -> float:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, Name):
        try:
            return env[expr.name]
        except KeyError:
            raise ValidationError(f"undefined name {expr.name!r}") from None
    if isinstance(expr, BinOp):
        left = _eval_expr(expr.left, group, snapshot, env)
        right = _eval_expr(expr.right, group, snapshot, env)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        raise ValidationError(f"unknown operator {expr.op!r}")
    if isinstance(expr, Proportion):
        site = group.signature.relation(expr.relation)
        predicate = [(t.name, t.value) for t in expr.predicate]
        return snapshot.proportion_at_site(site, expr.relation, predicate)
    raise TypeError(f"not a probability expression: {expr!r}")


def _matches(condition: tuple[Test, ...], group: Group) -> bool:
    sig = group.signature
    for test in condition:
        if sig.has_feature(test.name):
            if sig.feature(test.name) != test.value:
                return False
        elif sig.has_relation(test.name):
            if sig.relation(test.name) != test.value:
                return False
        else:
            raise SchemaError(f"condition tests unknown attribute {test.name!r}")
    return True


def evaluate_rule(rule: Rule, group: Group, snapshot: Population) -> Distribution | None:
    """Evaluate ``rule`` for ``group`` against the start-of-iteration snapshot.

    Let-bindings are evaluated first, in order; clauses are then scanned in
    order and the first one whose condition the group satisfies yields the
    result (first match wins).  Returns ``None`` when no condition holds.

    Raises ProbabilityRangeError when an evaluated branch probability falls
    outside [0, 1] and ProbabilitySumError when a clause's probabilities do
    not sum to 1 within ``SUM_TOLERANCE`` — distributions are never silently
    renormalized, since a bad sum would break mass conservation.
    """
    env: dict[str, float] = {}
    for name, expr in rule.lets:
        env[name] = _eval_expr(expr, group, snapshot, env)
    for clause in rule.clauses:
        if not _matches(clause.condition, group):
            continue
        out = []
        total = 0.0
        for branch in clause.branches:
            p = _eval_expr(branch.probability, group, snapshot, env)
            if not (0.0 <= p <= 1.0):
                raise ProbabilityRangeError(
                    f"rule {rule.name!r}: branch probability {p!r} outside [0, 1]"
                )
            total += p
            out.append((p, branch.actions))
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ProbabilitySumError(
                f"rule {rule.name!r}: branch probabilities sum to {total!r}, not 1"
            )
        return tuple(out)
    return None


# ---------------------------------------------------------------------------
# Static validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # 'warning' or 'info'
    message: str
    line: int | None = None
    column: int | None = None

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}: " if self.line is not None else ""
        return f"{where}{self.severity}: {self.message}"


def _conditions_overlap(a: tuple[Test, ...], b: tuple[Test, ...]) -> bool:
    """True when some group could satisfy both pure-equality conditions,
    i.e. no attribute is tested against different values in the two."""
    values_a = {}
    for t in a:
        values_a[t.name] = t.value
    for t in b:
        if t.name in values_a and values_a[t.name] != t.value:
            return False
    return True


def _expr_names(expr: Expr, features: set[str], relations: set[str]) -> None:
    if isinstance(expr, BinOp):
        _expr_names(expr.left, features, relations)
        _expr_names(expr.right, features, relations)
    elif isinstance(expr, Proportion):
        relations.add(expr.relation)
        for t in expr.predicate:
            features.add(t.name)


def referenced_attribute_names(rules: RuleSet | Rule) -> tuple[frozenset[str], frozenset[str], frozenset[str]]:
    """Names queried or changed by the rules.

    Returns ``(known_features, known_relations, untyped)``: proportion
    predicates and feature actions pin a name as a feature, proportion
    relation arguments, rel() sources and relation actions pin it as a
    relation; bare condition tests are syntactically untyped and land in the
    third set for the caller to classify against a schema.
    """
    features: set[str] = set()
    relations: set[str] = set()
    untyped: set[str] = set()
    rule_iter = rules.rules if isinstance(rules, RuleSet) else (rules,)
    for rule in rule_iter:
        for _, expr in rule.lets:
            _expr_names(expr, features, relations)
        for clause in rule.clauses:
            for test in clause.condition:
                untyped.add(test.name)
            for branch in clause.branches:
                _expr_names(branch.probability, features, relations)
                for action in branch.actions:
                    if isinstance(action, SetFeature):
                        features.add(action.name)
                    else:
                        relations.add(action.name)
                        if isinstance(action.target, RelationLookup):
                            relations.add(action.target.relation)
    return frozenset(features), frozenset(relations), frozenset(untyped - features - relations)


def validate_ruleset(rules: RuleSet, schema: ModelSchema | None = None) -> list[Diagnostic]:
    """Best-effort static diagnostics; never raises.

    Reports overlapping pure-equality conditions within a rule (first match
    would shadow the later clause), branches with literal probability zero,
    and — when a schema is available — attributes no rule queries or changes
    (which the population compiler may drop).
    """
    out: list[Diagnostic] = []
    for rule in rules:
        for j, later in enumerate(rule.clauses):
            for earlier in rule.clauses[:j]:
                if _conditions_overlap(earlier.condition, later.condition):
                    line, col = later.pos or (None, None)
                    out.append(
                        Diagnostic(
                            "warning",
                            f"rule {rule.name!r}: clause condition overlaps an earlier clause;"
                            " first match wins",
                            line,
                            col,
                        )
                    )
                    break
        for clause in rule.clauses:
            for branch in clause.branches:
                if isinstance(branch.probability, Literal) and branch.probability.value == 0.0:
                    line, col = branch.pos or (None, None)
                    out.append(
                        Diagnostic(
                            "warning",
                            f"rule {rule.name!r}: branch has literal probability 0",
                            line,
                            col,
                        )
                    )

    schema = schema or rules.schema
    if schema is not None:
        features, relations, untyped = referenced_attribute_names(rules)
        used = set(features) | set(relations) | set(untyped)
        for name in schema.features + schema.relations:
            if name not in used:
                out.append(Diagnostic("info", f"attribute {name!r} is not referenced by any rule"))
    return out
