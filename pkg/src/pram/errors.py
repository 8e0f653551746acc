"""Exception hierarchy.

Errors that originate in rule source text carry a line/column position;
runtime errors raised while evaluating or stepping a model do not.
"""

from __future__ import annotations


class PramError(Exception):
    """Base class for all errors raised by this package."""


class SourceError(PramError):
    """An error attributable to a position in rule source text.

    ``line`` and ``column`` are 1-based; they are ``None`` for errors raised
    outside of parsing/validation (e.g. from programmatically built rules).
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        return f"{self.line}:{self.column}: {self.message}"


class ParseError(SourceError):
    """Rule source text is not syntactically valid."""


class SchemaError(SourceError):
    """A name does not fit the model schema (unknown attribute, wrong kind,
    unregistered site, missing record value)."""


class ValidationError(SourceError):
    """Structurally invalid rules: literal branch probabilities that cannot
    sum to one, duplicate action targets, duplicate rule or let names."""


class UnknownSiteError(PramError):
    """A site was referenced that is not in the population's registry."""


class EmptySiteError(PramError):
    """A proportion query hit a site holding zero total mass."""


class ProbabilityRangeError(PramError):
    """An evaluated branch probability fell outside [0, 1]."""


class ProbabilitySumError(PramError):
    """Evaluated branch probabilities of a clause do not sum to one."""


class ActionConflictError(PramError):
    """Two concurrently applicable rules set the same attribute to
    different values."""


class RunError(PramError):
    """A multi-iteration run failed part-way through.

    ``trajectory`` holds the observations recorded up to (not including) the
    failing iteration; the original error is chained as ``__cause__``.
    """

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
