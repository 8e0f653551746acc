"""Textual rule DSL: tokenizer, recursive-descent parser, pretty printer.

Grammar (whitespace-insensitive, ``#`` starts a line comment)::

    ruleset   := rule*
    rule      := "rule" IDENT "{" let* clause+ "}"
    let       := "let" IDENT "=" pexpr ";"
    clause    := "when" cond "{" branch+ "}"
    cond      := "true" | test ("and" test)*
    test      := IDENT "==" STRING
    branch    := pexpr "=>" action ("," action)* ";"
    action    := "set" IDENT "=" value
    value     := STRING | "site(" STRING ")" | "rel(" IDENT ")"
    pexpr     := term (("+" | "-") term)*
    term      := factor ("*" factor)*
    factor    := NUMBER | IDENT | "(" pexpr ")"
               | "proportion(" IDENT ("," test)* ")"

Parsing is total over valid input and every token position is tracked, so
errors carry a 1-based line/column.  When a schema is supplied, attribute
references, site literals and action shapes are checked against it and
mismatches raise :class:`SchemaError` at the offending token.  Clauses whose
branch probabilities are all numeric literals must sum to 1 within
``SUM_TOLERANCE`` at parse time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import ModelSchema, RelationLookup, SetFeature, SetRelation, SiteLiteral
from .errors import ParseError, SchemaError, ValidationError
from .rules import (
    SUM_TOLERANCE,
    BinOp,
    Branch,
    Expr,
    Literal,
    Name,
    Proportion,
    Rule,
    RuleClause,
    RuleSet,
    Test,
)

__all__ = ["parse_rules", "format_rules"]

KEYWORDS = frozenset(
    {"rule", "let", "when", "true", "and", "set", "site", "rel", "proportion"}
)

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>\#[^\n]*)
    | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<string>"[^"\n]*")
    | (?P<op>==|=>|[{}()=,;+\-*])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # 'number' | 'ident' | 'string' | 'op' | 'eof'
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        i = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], schema: ModelSchema | None):
        self.tokens = tokens
        self.pos = 0
        self.schema = schema

    # -- token plumbing ------------------------------------------------------

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.cur
        self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.cur
        return tok.kind == kind and (text is None or tok.text == text)

    def at_keyword(self, word: str) -> bool:
        return self.at("ident", word)

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> _Token:
        if not self.at(kind, text):
            wanted = what or (text if text is not None else kind)
            found = self.cur.text or "end of input"
            raise ParseError(f"expected {wanted}, found {found!r}", self.cur.line, self.cur.column)
        return self.advance()

    def expect_keyword(self, word: str) -> _Token:
        return self.expect("ident", word, what=f"'{word}'")

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.cur
        raise ParseError(message, tok.line, tok.column)

    # -- schema checks --------------------------------------------------------

    def _check_attribute(self, tok: _Token) -> None:
        if self.schema is not None and tok.text not in self.schema.features and tok.text not in self.schema.relations:
            raise SchemaError(f"unknown attribute {tok.text!r}", tok.line, tok.column)

    def _check_feature(self, tok: _Token, context: str) -> None:
        if self.schema is None:
            return
        if tok.text in self.schema.relations:
            raise SchemaError(f"{context} requires a feature, but {tok.text!r} is a relation", tok.line, tok.column)
        if tok.text not in self.schema.features:
            raise SchemaError(f"unknown feature {tok.text!r}", tok.line, tok.column)

    def _check_relation(self, tok: _Token, context: str) -> None:
        if self.schema is None:
            return
        if tok.text in self.schema.features:
            raise SchemaError(f"{context} requires a relation, but {tok.text!r} is a feature", tok.line, tok.column)
        if tok.text not in self.schema.relations:
            raise SchemaError(f"unknown relation {tok.text!r}", tok.line, tok.column)

    def _check_site(self, tok: _Token, name: str) -> None:
        if self.schema is not None and name not in self.schema.sites:
            raise SchemaError(f"unknown site {name!r}", tok.line, tok.column)

    def _check_test(self, name_tok: _Token, value_tok: _Token) -> None:
        if self.schema is None:
            return
        self._check_attribute(name_tok)
        if name_tok.text in self.schema.relations:
            self._check_site(value_tok, value_tok.text[1:-1])

    # -- grammar ---------------------------------------------------------------

    def parse_ruleset(self) -> RuleSet:
        rules = []
        seen: dict[str, _Token] = {}
        while not self.at("eof"):
            tok = self.cur
            rule = self.parse_rule()
            if rule.name in seen:
                raise ValidationError(f"duplicate rule name {rule.name!r}", tok.line, tok.column)
            seen[rule.name] = tok
            rules.append(rule)
        return RuleSet(tuple(rules), schema=self.schema)

    def parse_rule(self) -> Rule:
        start = self.expect_keyword("rule")
        name = self.expect("ident", what="rule name")
        if name.text in KEYWORDS:
            self.fail(f"{name.text!r} is a reserved word", name)
        self.expect("op", "{")
        lets: list[tuple[str, Expr]] = []
        let_names: set[str] = set()
        while self.at_keyword("let"):
            lets.append(self.parse_let(let_names))
        clauses = []
        while self.at_keyword("when"):
            clauses.append(self.parse_clause(let_names))
        if not clauses:
            self.fail("rule needs at least one 'when' clause")
        self.expect("op", "}")
        return Rule(name.text, tuple(lets), tuple(clauses), pos=(start.line, start.column))

    def parse_let(self, let_names: set[str]) -> tuple[str, Expr]:
        self.expect_keyword("let")
        name = self.expect("ident", what="let name")
        if name.text in KEYWORDS:
            self.fail(f"{name.text!r} is a reserved word", name)
        if name.text in let_names:
            raise ValidationError(f"duplicate let name {name.text!r}", name.line, name.column)
        self.expect("op", "=")
        expr = self.parse_pexpr(let_names)
        self.expect("op", ";")
        let_names.add(name.text)
        return (name.text, expr)

    def parse_clause(self, let_names: set[str]) -> RuleClause:
        start = self.expect_keyword("when")
        condition = self.parse_condition()
        self.expect("op", "{")
        branches = []
        while not self.at("op", "}"):
            branches.append(self.parse_branch(let_names))
        if not branches:
            self.fail("clause needs at least one branch")
        self.expect("op", "}")
        clause = RuleClause(tuple(condition), tuple(branches), pos=(start.line, start.column))
        self._check_literal_sum(clause, start)
        return clause

    def _check_literal_sum(self, clause: RuleClause, start: _Token) -> None:
        probs = [b.probability for b in clause.branches]
        if all(isinstance(p, Literal) for p in probs):
            total = sum(p.value for p in probs)
            if abs(total - 1.0) > SUM_TOLERANCE:
                raise ValidationError(
                    f"literal branch probabilities sum to {total!r}, not 1",
                    start.line,
                    start.column,
                )

    def parse_condition(self) -> list[Test]:
        if self.at_keyword("true"):
            self.advance()
            return []
        tests = [self.parse_test()]
        while self.at_keyword("and"):
            self.advance()
            tests.append(self.parse_test())
        return tests

    def parse_test(self) -> Test:
        name = self.expect("ident", what="attribute name")
        self.expect("op", "==")
        value = self.expect("string", what="quoted value")
        self._check_test(name, value)
        return Test(name.text, value.text[1:-1])

    def parse_branch(self, let_names: set[str]) -> Branch:
        start = self.cur
        prob = self.parse_pexpr(let_names)
        self.expect("op", "=>")
        actions = [self.parse_action()]
        while self.at("op", ","):
            self.advance()
            actions.append(self.parse_action())
        self.expect("op", ";")
        targets = [a.name for a in actions]
        for i, t in enumerate(targets):
            if t in targets[:i]:
                raise ValidationError(
                    f"branch sets attribute {t!r} twice", start.line, start.column
                )
        return Branch(prob, tuple(actions), pos=(start.line, start.column))

    def parse_action(self):
        self.expect_keyword("set")
        name = self.expect("ident", what="attribute name")
        self.expect("op", "=")
        if self.at("string"):
            value = self.advance()
            self._check_feature(name, "a string-valued action")
            return SetFeature(name.text, value.text[1:-1])
        if self.at_keyword("site"):
            self.advance()
            self.expect("op", "(")
            site = self.expect("string", what="quoted site name")
            self.expect("op", ")")
            self._check_relation(name, "site(...)")
            self._check_site(site, site.text[1:-1])
            return SetRelation(name.text, SiteLiteral(site.text[1:-1]))
        if self.at_keyword("rel"):
            self.advance()
            self.expect("op", "(")
            source = self.expect("ident", what="relation name")
            self.expect("op", ")")
            self._check_relation(name, "rel(...)")
            self._check_relation(source, "rel(...)")
            return SetRelation(name.text, RelationLookup(source.text))
        self.fail("expected a quoted value, site(...) or rel(...)")

    # -- probability expressions ----------------------------------------------

    def parse_pexpr(self, let_names: set[str]) -> Expr:
        expr = self.parse_term(let_names)
        while self.at("op", "+") or self.at("op", "-"):
            op = self.advance().text
            right = self.parse_term(let_names)
            expr = BinOp(op, expr, right)
        return expr

    def parse_term(self, let_names: set[str]) -> Expr:
        expr = self.parse_factor(let_names)
        while self.at("op", "*"):
            self.advance()
            right = self.parse_factor(let_names)
            expr = BinOp("*", expr, right)
        return expr

    def parse_factor(self, let_names: set[str]) -> Expr:
        if self.at("number"):
            tok = self.advance()
            return Literal(float(tok.text))
        if self.at("op", "("):
            self.advance()
            expr = self.parse_pexpr(let_names)
            self.expect("op", ")")
            return expr
        if self.at_keyword("proportion"):
            self.advance()
            self.expect("op", "(")
            rel = self.expect("ident", what="relation name")
            self._check_relation(rel, "proportion(...)")
            predicate = []
            while self.at("op", ","):
                self.advance()
                name = self.expect("ident", what="feature name")
                self.expect("op", "==")
                value = self.expect("string", what="quoted value")
                self._check_feature(name, "a proportion predicate")
                predicate.append(Test(name.text, value.text[1:-1]))
            self.expect("op", ")")
            return Proportion(rel.text, tuple(predicate))
        if self.at("ident"):
            tok = self.cur
            if tok.text in KEYWORDS:
                self.fail(f"{tok.text!r} is a reserved word", tok)
            self.advance()
            if tok.text not in let_names:
                raise ValidationError(f"undefined name {tok.text!r}", tok.line, tok.column)
            return Name(tok.text)
        self.fail("expected a probability expression")


def parse_rules(text: str, schema: ModelSchema | None = None) -> RuleSet:
    """Parse rule DSL source into a RuleSet.

    With a schema, attribute references are resolved eagerly and mismatches
    raise SchemaError; without one, only syntax, name binding and literal-sum
    checks run.  Every raised error carries the offending line/column.
    """
    return _Parser(_tokenize(text), schema).parse_ruleset()


# ---------------------------------------------------------------------------
# Pretty printer
# ---------------------------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2}


def _format_number(v: float) -> str:
    return str(int(v)) if v.is_integer() else repr(v)


def _format_string(s: str) -> str:
    if '"' in s or "\n" in s:
        raise ValueError(f"value {s!r} cannot be written in the rule DSL")
    return f'"{s}"'


def _format_expr(expr: Expr, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(expr, Literal):
        return _format_number(expr.value)
    if isinstance(expr, Name):
        return expr.name
    if isinstance(expr, Proportion):
        parts = [expr.relation] + [f"{t.name} == {_format_string(t.value)}" for t in expr.predicate]
        return f"proportion({', '.join(parts)})"
    prec = _PRECEDENCE[expr.op]
    left = _format_expr(expr.left, prec, right_side=False)
    right = _format_expr(expr.right, prec, right_side=True)
    text = f"{left} {expr.op} {right}"
    # Parenthesize when precedence (or left-associativity, on the right rim)
    # would otherwise reassociate the tree.
    if prec < parent_prec or (prec == parent_prec and right_side):
        return f"({text})"
    return text


def _format_action(action) -> str:
    if isinstance(action, SetFeature):
        return f"set {action.name} = {_format_string(action.value)}"
    target = action.target
    if isinstance(target, SiteLiteral):
        return f"set {action.name} = site({_format_string(target.name)})"
    return f"set {action.name} = rel({target.relation})"


def _format_condition(condition: tuple[Test, ...]) -> str:
    if not condition:
        return "true"
    return " and ".join(f"{t.name} == {_format_string(t.value)}" for t in condition)


def format_rules(rules: RuleSet) -> str:
    """Render a RuleSet as DSL source; re-parsing yields an equal RuleSet."""
    chunks = []
    for rule in rules:
        lines = [f"rule {rule.name} {{"]
        for name, expr in rule.lets:
            lines.append(f"  let {name} = {_format_expr(expr)};")
        for clause in rule.clauses:
            lines.append(f"  when {_format_condition(clause.condition)} {{")
            for branch in clause.branches:
                actions = ", ".join(_format_action(a) for a in branch.actions)
                lines.append(f"    {_format_expr(branch.probability)} => {actions};")
            lines.append("  }")
        lines.append("}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + ("\n" if chunks else "")
