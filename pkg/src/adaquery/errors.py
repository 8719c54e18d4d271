"""Exception types shared across the package."""


class AdaqueryError(Exception):
    """Base class for all package errors."""


class CatalogError(AdaqueryError):
    """A feature id is unknown or a catalog file is malformed."""


class StatsParseError(AdaqueryError):
    """A learned-probabilities file failed to parse."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MockSpecError(AdaqueryError):
    """A mock dialect spec file is invalid."""


class RuleExhaustedError(AdaqueryError):
    """Every alternative of a choice rule is classified unsupported."""


class EmptySchemaError(AdaqueryError):
    """No object of the requested kind exists in the schema."""


class GenerationError(AdaqueryError):
    """The generator cannot produce a statement under current constraints."""


class TargetError(AdaqueryError):
    """A target spec string cannot be resolved to an adapter."""
