"""Metamorphic test oracles over generated query cases.

Both oracles derive companion queries from a base case
``SELECT * FROM source WHERE predicate`` and compare results that must
agree on any correct engine:

ternary partitioning
    The rows of ``SELECT * FROM source`` equal the multiset union of the
    three partitions ``WHERE p``, ``WHERE NOT p`` and ``WHERE p IS NULL``.
optimization consistency
    The row count of ``SELECT * FROM source WHERE p`` (planner may use
    indexes) equals the number of rows for which the flattened projection
    ``SELECT (p) IS TRUE FROM source`` yields true (predicate evaluated
    per row, no filtering to optimize).

Any execution error makes the check a Skip, never a Fail: error outcomes
feed the feature statistics instead.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .adapters import DbAdapter, ExecutionStatus
from .catalog import FeatureCatalog
from .generator import GeneratedStatement, QueryCase
from .sqlast import (
    Binary,
    Constant,
    DType,
    Select,
    Statement,
    Unary,
    features_of,
    render_statement,
)

ORACLE_KINDS = ("tlp", "norec")

PASS = "Pass"
FAIL = "Fail"
SKIP = "Skip"

# role tags, in canonical statement order per oracle
TLP_TAGS = ("case", "base", "negated", "isnull")
NOREC_TAGS = ("case", "flattened")


@dataclass(frozen=True)
class OracleCheck:
    """Outcome of one oracle application.

    ``statements`` holds the case query first, then the derived queries in
    canonical order; ``statuses`` and ``rows`` align with it. Every
    statement was executed and should be fed to the feature statistics.
    """

    oracle: str
    status: str
    statements: tuple[GeneratedStatement, ...]
    statuses: tuple[ExecutionStatus, ...]
    rows: tuple[tuple | None, ...]
    detail: str = ""

    @property
    def case_features(self):
        return self.statements[0].features

    @property
    def tags(self) -> tuple[str, ...]:
        return TLP_TAGS if self.oracle == "tlp" else NOREC_TAGS


def wrap_statement(ast: Statement, catalog: FeatureCatalog) -> GeneratedStatement:
    """Package a raw AST with its rendered text and feature set."""
    return GeneratedStatement(
        render_statement(ast, catalog),
        type(ast).__name__,
        features_of(ast, catalog),
        ast,
    )


def normalize_row(row) -> tuple:
    return tuple(int(v) if isinstance(v, bool) else v for v in row)


def row_multiset(rows) -> Counter:
    return Counter(normalize_row(r) for r in rows)


def _truthy_count(rows) -> int:
    n = 0
    for row in rows:
        v = row[0]
        if v is True or v == 1:
            n += 1
    return n


def _execute_all(statements, adapter: DbAdapter):
    statuses = []
    rows = []
    for st in statements:
        result = adapter.query(st)
        statuses.append(result.status)
        rows.append(tuple(result.rows) if result.status.ok else None)
    return tuple(statuses), tuple(rows)


def tlp_derived(case: QueryCase, catalog: FeatureCatalog) -> tuple[GeneratedStatement, ...]:
    base = Select(None, case.source)
    negated = Select(None, case.source, Unary("NOT", case.predicate))
    isnull = Select(
        None, case.source, Binary("IS", case.predicate, Constant(None, DType.UNTYPED))
    )
    return tuple(wrap_statement(q, catalog) for q in (base, negated, isnull))


def norec_derived(case: QueryCase, catalog: FeatureCatalog) -> tuple[GeneratedStatement, ...]:
    flattened = Select(
        (Binary("IS", case.predicate, Constant(True, DType.BOOLEAN)),), case.source
    )
    return (wrap_statement(flattened, catalog),)


def tlp_check(
    case: QueryCase, adapter: DbAdapter, catalog: FeatureCatalog
) -> OracleCheck:
    original = GeneratedStatement(case.sql, "Select", case.features, case.select)
    statements = (original, *tlp_derived(case, catalog))
    statuses, rows = _execute_all(statements, adapter)
    if not all(s.ok for s in statuses):
        bad = next(s for s in statuses if not s.ok)
        return OracleCheck("tlp", SKIP, statements, statuses, rows, bad.message)
    kept, base, negated, isnull = rows
    union = row_multiset(kept) + row_multiset(negated) + row_multiset(isnull)
    whole = row_multiset(base)
    if union == whole:
        return OracleCheck("tlp", PASS, statements, statuses, rows)
    detail = (
        f"partition union has {sum(union.values())} rows, "
        f"base query has {sum(whole.values())}"
    )
    return OracleCheck("tlp", FAIL, statements, statuses, rows, detail)


def norec_check(
    case: QueryCase, adapter: DbAdapter, catalog: FeatureCatalog
) -> OracleCheck:
    original = GeneratedStatement(case.sql, "Select", case.features, case.select)
    statements = (original, *norec_derived(case, catalog))
    statuses, rows = _execute_all(statements, adapter)
    if not all(s.ok for s in statuses):
        bad = next(s for s in statuses if not s.ok)
        return OracleCheck("norec", SKIP, statements, statuses, rows, bad.message)
    optimized = len(rows[0])
    flattened = _truthy_count(rows[1])
    if optimized == flattened:
        return OracleCheck("norec", PASS, statements, statuses, rows)
    detail = f"optimized query kept {optimized} rows, flattened count is {flattened}"
    return OracleCheck("norec", FAIL, statements, statuses, rows, detail)


_CHECKS = {"tlp": tlp_check, "norec": norec_check}


def run_oracle(
    kind: str, case: QueryCase, adapter: DbAdapter, catalog: FeatureCatalog
) -> OracleCheck:
    try:
        check = _CHECKS[kind]
    except KeyError:
        raise ValueError(f"unknown oracle {kind!r}") from None
    return check(case, adapter, catalog)


def recompute_verdict(oracle: str, rows: list) -> tuple[str, str]:
    """Re-derive Pass/Fail from freshly fetched row sets, in canonical
    statement order (used when replaying a saved reproduction)."""
    if any(r is None for r in rows):
        return SKIP, "a statement failed during replay"
    if oracle == "tlp":
        kept, base, negated, isnull = rows
        union = row_multiset(kept) + row_multiset(negated) + row_multiset(isnull)
        whole = row_multiset(base)
        if union == whole:
            return PASS, ""
        return FAIL, (
            f"partition union has {sum(union.values())} rows, "
            f"base query has {sum(whole.values())}"
        )
    if oracle == "norec":
        optimized = len(rows[0])
        flattened = _truthy_count(rows[1])
        if optimized == flattened:
            return PASS, ""
        return FAIL, (
            f"optimized query kept {optimized} rows, flattened count is {flattened}"
        )
    raise ValueError(f"unknown oracle {oracle!r}")
