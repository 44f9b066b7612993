"""Exception types shared across the toolkit."""

from __future__ import annotations

from typing import Optional

from .nodes import SourceSpan


class SymrtloError(Exception):
    """Base class for all toolkit errors."""


class ParseError(SymrtloError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        self.message = message
        where = f"{span}: " if span is not None else ""
        super().__init__(f"{where}{message}")


class UnsupportedConstruct(ParseError):
    """Legal Verilog that lies outside the supported subset."""


class DesignInvalid(SymrtloError):
    """A design with error-severity diagnostics was handed to an operation
    that requires a validated design."""

    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        super().__init__(
            "; ".join(str(d) for d in diagnostics) or "design failed validation"
        )


class CombinationalLoop(SymrtloError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("combinational loop: " + " -> ".join(self.cycle))


class MissingInput(SymrtloError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"stimulus does not cover input port {name!r}")


class NoClockFound(SymrtloError):
    pass


class NotAnFsm(SymrtloError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class AmbiguousFsm(SymrtloError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class UnreachableInitial(SymrtloError):
    pass


class TransformFailed(SymrtloError):
    def __init__(self, site, reason: str):
        self.site = site
        self.reason = reason
        super().__init__(f"{site}: {reason}")


class DimensionMismatch(SymrtloError):
    pass


class EmptyScores(SymrtloError):
    pass


class EmptyLibrary(SymrtloError):
    pass


class SchemaError(SymrtloError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class DuplicateRuleName(SymrtloError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"duplicate rule name {name!r}")


class SpaceTooLarge(SymrtloError):
    def __init__(self, detail: str):
        super().__init__(detail)


class StateSpaceTooLarge(SymrtloError):
    def __init__(self, detail: str):
        super().__init__(detail)


class InterfaceMismatch(SymrtloError):
    def __init__(self, detail: str):
        super().__init__(detail)


class UnsupportedForBlasting(SymrtloError):
    def __init__(self, construct: str):
        self.construct = construct
        super().__init__(f"cannot bit-blast construct: {construct}")


class DomainError(SymrtloError):
    pass


class VerificationFailed(SymrtloError):
    def __init__(self, detail: str):
        super().__init__(detail)
