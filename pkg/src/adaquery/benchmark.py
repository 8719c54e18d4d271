"""Reference mock-dialect configurations used by tests and experiments.

``benchmark_catalog`` is a fixed 100-feature catalog (statements, clauses,
data types, operators, single-argument functions with their arg-type
composites). ``benchmark_spec`` marks 30 of those features unsupported,
closure-consistently: when a function is unsupported, so are all of its
arg-type composites. ``injected_bugs_spec`` is a fully-supported dialect
carrying three logic bugs with disjoint trigger sets.
"""

from __future__ import annotations

from .catalog import FeatureCatalog, composite_identifier, default_catalog
from .mocksql import BugInjection, MockDialectSpec

_STATEMENTS = ("TABLE", "INDEX", "VIEW", "INSERT", "ANALYZE", "SELECT")
_CLAUSES = (
    "WHERE",
    "DISTINCT",
    "UNIQUE",
    "SUBQUERY",
    "INNER_JOIN",
    "LEFT_JOIN",
    "RIGHT_JOIN",
    "FULL_JOIN",
    "CROSS_JOIN",
    "NATURAL_JOIN",
)
_DTYPES = ("INTEGER", "TEXT", "BOOLEAN")
_OPERATORS = (
    "=", "!=", "<>", "<", "<=", ">", ">=", "<=>",
    "IS", "IS_NOT", "AND", "OR", "NOT",
    "+", "-", "*", "/", "%", "~", "<<", ">>",
    "CONCAT", "LIKE", "BETWEEN", "CASE",
)
_FUNCTIONS = (
    "ABS", "SIGN", "SIN", "ASIN", "ROUND", "LENGTH", "UNICODE",
    "UPPER", "LOWER", "TRIM", "LTRIM", "RTRIM", "HEX", "CHAR",
)

_UNSUPPORTED_PLAIN = (
    "INDEX", "UNIQUE", "ANALYZE",
    "RIGHT_JOIN", "FULL_JOIN", "NATURAL_JOIN",
    "<=>", "<<", ">>", "%", "~",
    "LIKE", "BETWEEN", "IS_NOT",
)
_UNSUPPORTED_FUNCTIONS = ("SIN", "HEX", "CHAR", "UNICODE")


def _with_composites(functions) -> list[str]:
    out = []
    for name in functions:
        out.append(name)
        for dtype in _DTYPES:
            out.append(composite_identifier(name, 1, dtype))
    return out


def benchmark_identifiers() -> tuple[str, ...]:
    return (*_STATEMENTS, *_CLAUSES, *_DTYPES, *_OPERATORS,
            *_with_composites(_FUNCTIONS))


def benchmark_catalog() -> FeatureCatalog:
    return default_catalog().subset(benchmark_identifiers())


def benchmark_unsupported() -> frozenset[str]:
    return frozenset(
        (*_UNSUPPORTED_PLAIN, *_with_composites(_UNSUPPORTED_FUNCTIONS))
    )


def benchmark_spec() -> MockDialectSpec:
    supported = frozenset(benchmark_identifiers()) - benchmark_unsupported()
    return MockDialectSpec(supported=supported, typing="dynamic")


INJECTED_BUGS = (
    BugInjection(frozenset({"*", ">"}), "filter_null_true"),
    BugInjection(frozenset({"CONCAT", "<"}), "is_null_false"),
    BugInjection(frozenset({"<=", "+"}), "filter_le_as_lt"),
)


def injected_bugs_spec(catalog: FeatureCatalog | None = None) -> MockDialectSpec:
    catalog = catalog if catalog is not None else default_catalog()
    supported = frozenset(e.identifier for e in catalog)
    return MockDialectSpec(
        supported=supported, typing="dynamic", bugs=INJECTED_BUGS
    )
