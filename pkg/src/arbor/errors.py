"""Exception types shared across the package."""

from __future__ import annotations


class ArborError(Exception):
    """Base class for all errors raised by arbor."""


class UnknownNode(ArborError, LookupError):
    def __init__(self, node, row: int | None = None):
        self.node = node
        self.row = row
        where = f" (row {row})" if row is not None else ""
        super().__init__(f"unknown node {node!r}{where}")


class ParseError(ArborError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class NotIndexed(ArborError, LookupError):
    pass


class NotInScope(ArborError, ValueError):
    pass


class NoIndex(ArborError, LookupError):
    pass


class MalformedDewey(ArborError, ValueError):
    pass


class WouldCreateCycle(ArborError, ValueError):
    pass


class WouldCreateMultiParent(ArborError, ValueError):
    pass


class ParentRequired(ArborError, ValueError):
    pass


class SiblingOrderError(ArborError, ValueError):
    pass


class InfeasibleConfig(ArborError, ValueError):
    pass


class QueryTimeout(ArborError, TimeoutError):
    pass


class QuerySyntaxError(ArborError, ValueError):
    """Raised by the pattern parser.

    ``position`` is the 0-based character offset where parsing failed and
    ``expected`` names the token(s) the parser was looking for.
    """

    def __init__(self, message: str, position: int, expected: str | None = None):
        self.position = position
        self.expected = expected
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at position {position}{hint}")


class NotAForest(ArborError, ValueError):
    """A tree spec was registered over data that is not a forest."""

    def __init__(self, violation):
        self.violation = violation
        super().__init__(f"not a forest: {violation}")
