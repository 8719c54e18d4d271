"""Statement and expression ASTs, rendering, typing, and the feature walk.

The generator builds these nodes directly; the mock dialect parses its own
rendered text back into them. ``features_of`` recovers the exact feature
set of a statement from its AST alone, which keeps the generator's
recorded sets, the mock's support checks, and replayed text consistent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterator, Union

from . import catalog as cat
from .catalog import CatalogEntry, FeatureCatalog, composite_identifier
from .errors import CatalogError
from .features import FeatureCategory, FeatureId


class DType(enum.Enum):
    INTEGER = "INTEGER"
    TEXT = "TEXT"
    BOOLEAN = "BOOLEAN"
    UNTYPED = "UNTYPED"  # NULL literals; unifies with anything


CONCRETE_DTYPES = (DType.INTEGER, DType.TEXT, DType.BOOLEAN)


# --------------------------------------------------------------------------
# expressions

@dataclass(frozen=True)
class Constant:
    value: Union[int, str, bool, None]
    dtype: DType


@dataclass(frozen=True)
class ColumnRef:
    table: str
    column: str
    dtype: DType


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class FunctionCall:
    name: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class NaryOp:
    """Operators of arity > 2 that are not function calls (BETWEEN)."""

    op: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class CaseWhen:
    condition: "Expr"
    then: "Expr"
    otherwise: "Expr"


@dataclass(frozen=True)
class ScalarSubquery:
    select: "Select"


Expr = Union[
    Constant, ColumnRef, Unary, Binary, FunctionCall, NaryOp, CaseWhen, ScalarSubquery
]


# --------------------------------------------------------------------------
# statements

@dataclass(frozen=True)
class ColumnSpec:
    name: str
    dtype: DType


@dataclass(frozen=True)
class CreateTable:
    name: str
    columns: tuple[ColumnSpec, ...]


@dataclass(frozen=True)
class CreateIndex:
    name: str
    table: str
    columns: tuple[str, ...]
    unique: bool = False


@dataclass(frozen=True)
class TableRef:
    name: str


@dataclass(frozen=True)
class Join:
    kind: str  # join ClauseKeyword feature id, e.g. LEFT_JOIN
    left: TableRef
    right: TableRef
    on: Expr | None = None


@dataclass(frozen=True)
class Select:
    projection: tuple[Expr, ...] | None  # None renders as *
    source: Union[TableRef, Join]
    where: Expr | None = None
    distinct: bool = False


@dataclass(frozen=True)
class CreateView:
    name: str
    columns: tuple[str, ...]
    select: Select


@dataclass(frozen=True)
class Insert:
    table: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Constant, ...], ...]


@dataclass(frozen=True)
class Analyze:
    pass


Statement = Union[CreateTable, CreateIndex, CreateView, Insert, Analyze, Select]

NO_ON_JOINS = frozenset({"CROSS_JOIN", "NATURAL_JOIN"})


# --------------------------------------------------------------------------
# rendering

def render_value(value) -> str:
    if value is None:
        return "NULL"
    if value is True:
        return "TRUE"
    if value is False:
        return "FALSE"
    if isinstance(value, int):
        return str(value)
    return "'" + value.replace("'", "''") + "'"


def render_expr(expr: Expr, catalog: FeatureCatalog) -> str:
    if isinstance(expr, Constant):
        return render_value(expr.value)
    if isinstance(expr, ColumnRef):
        return f"{expr.table}.{expr.column}"
    if isinstance(expr, Unary):
        return catalog.get(expr.op).template.format(render_expr(expr.operand, catalog))
    if isinstance(expr, Binary):
        return catalog.get(expr.op).template.format(
            render_expr(expr.left, catalog), render_expr(expr.right, catalog)
        )
    if isinstance(expr, FunctionCall):
        rendered = [render_expr(a, catalog) for a in expr.args]
        return catalog.get(expr.name).template.format(*rendered)
    if isinstance(expr, NaryOp):
        rendered = [render_expr(a, catalog) for a in expr.args]
        return catalog.get(expr.op).template.format(*rendered)
    if isinstance(expr, CaseWhen):
        return catalog.get("CASE").template.format(
            render_expr(expr.condition, catalog),
            render_expr(expr.then, catalog),
            render_expr(expr.otherwise, catalog),
        )
    if isinstance(expr, ScalarSubquery):
        return f"({render_statement(expr.select, catalog)} ORDER BY 1 LIMIT 1)"
    raise TypeError(f"not an expression: {expr!r}")


def _render_source(source, catalog: FeatureCatalog) -> str:
    if isinstance(source, TableRef):
        return source.name
    keyword = catalog.get(source.kind).template
    text = f"{source.left.name} {keyword} {source.right.name}"
    if source.on is not None:
        text += f" ON {render_expr(source.on, catalog)}"
    return text


def render_statement(stmt: Statement, catalog: FeatureCatalog) -> str:
    if isinstance(stmt, CreateTable):
        cols = ", ".join(f"{c.name} {c.dtype.value}" for c in stmt.columns)
        return f"CREATE TABLE {stmt.name} ({cols})"
    if isinstance(stmt, CreateIndex):
        unique = "UNIQUE " if stmt.unique else ""
        cols = ", ".join(stmt.columns)
        return f"CREATE {unique}INDEX {stmt.name} ON {stmt.table} ({cols})"
    if isinstance(stmt, CreateView):
        cols = ", ".join(stmt.columns)
        return (
            f"CREATE VIEW {stmt.name} ({cols}) AS "
            f"{render_statement(stmt.select, catalog)}"
        )
    if isinstance(stmt, Insert):
        cols = ", ".join(stmt.columns)
        rows = ", ".join(
            "(" + ", ".join(render_value(c.value) for c in row) + ")" for row in stmt.rows
        )
        return f"INSERT INTO {stmt.table} ({cols}) VALUES {rows}"
    if isinstance(stmt, Analyze):
        return "ANALYZE"
    if isinstance(stmt, Select):
        parts = ["SELECT"]
        if stmt.distinct:
            parts.append("DISTINCT")
        if stmt.projection is None:
            parts.append("*")
        else:
            parts.append(", ".join(render_expr(e, catalog) for e in stmt.projection))
        parts.append("FROM")
        parts.append(_render_source(stmt.source, catalog))
        if stmt.where is not None:
            parts.append("WHERE")
            parts.append(render_expr(stmt.where, catalog))
        return " ".join(parts)
    raise TypeError(f"not a statement: {stmt!r}")


# --------------------------------------------------------------------------
# typing

def _call_parts(expr) -> tuple[str, tuple[Expr, ...]] | None:
    """(feature id, argument tuple) for any applied operator or function."""
    if isinstance(expr, Unary):
        return expr.op, (expr.operand,)
    if isinstance(expr, Binary):
        return expr.op, (expr.left, expr.right)
    if isinstance(expr, FunctionCall):
        return expr.name, expr.args
    if isinstance(expr, NaryOp):
        return expr.op, expr.args
    if isinstance(expr, CaseWhen):
        return "CASE", (expr.condition, expr.then, expr.otherwise)
    return None


def dtype_of(expr: Expr, catalog: FeatureCatalog) -> DType:
    if isinstance(expr, (Constant, ColumnRef)):
        return expr.dtype
    if isinstance(expr, ScalarSubquery):
        projection = expr.select.projection
        if not projection:
            return DType.UNTYPED
        return dtype_of(projection[0], catalog)
    parts = _call_parts(expr)
    if parts is None:
        raise TypeError(f"not an expression: {expr!r}")
    name, args = parts
    signature = catalog.get(name).signature
    if signature is None:
        return DType.UNTYPED
    if signature.result != cat.SAME:
        return DType(signature.result)
    for slot, arg in zip(signature.args, args):
        if slot == cat.SAME:
            dt = dtype_of(arg, catalog)
            if dt is not DType.UNTYPED:
                return dt
    return DType.UNTYPED


def call_violates_signature(expr, catalog: FeatureCatalog) -> bool:
    """True when this node's operand types break its declared signature.

    NULL (untyped) operands unify with every slot; ANY slots accept all
    types; all SAME slots must agree on one concrete type.
    """
    parts = _call_parts(expr)
    if parts is None:
        return False
    name, args = parts
    signature = catalog.get(name).signature
    if signature is None:
        return False
    group: DType | None = None
    for slot, arg in zip(signature.args, args):
        dt = dtype_of(arg, catalog)
        if dt is DType.UNTYPED or slot == cat.ANY:
            continue
        if slot == cat.SAME:
            if group is None:
                group = dt
            elif dt is not group:
                return True
        elif slot != dt.value:
            return True
    return False


def _predicate_ill_typed(expr: Expr | None, catalog: FeatureCatalog) -> bool:
    if expr is None:
        return False
    return dtype_of(expr, catalog) not in (DType.BOOLEAN, DType.UNTYPED)


def _expr_has_violation(expr: Expr, catalog: FeatureCatalog) -> bool:
    if call_violates_signature(expr, catalog):
        return True
    if isinstance(expr, ScalarSubquery):
        return _select_has_violation(expr.select, catalog)
    return any(_expr_has_violation(c, catalog) for c in expr_children(expr))


def _select_has_violation(select: Select, catalog: FeatureCatalog) -> bool:
    if _predicate_ill_typed(select.where, catalog):
        return True
    if isinstance(select.source, Join) and _predicate_ill_typed(select.source.on, catalog):
        return True
    return any(_expr_has_violation(e, catalog) for e in statement_exprs(select))


def statement_type_violations(stmt: Statement, catalog: FeatureCatalog) -> bool:
    """True when any expression in the statement is ill-typed, including a
    non-boolean WHERE or join condition."""
    if isinstance(stmt, Select):
        return _select_has_violation(stmt, catalog)
    if isinstance(stmt, CreateView):
        return _select_has_violation(stmt.select, catalog)
    return False


# --------------------------------------------------------------------------
# feature walk

def _expr_features(expr: Expr, catalog: FeatureCatalog, out: set[FeatureId]) -> None:
    if isinstance(expr, Constant):
        if expr.dtype in CONCRETE_DTYPES:
            out.add(catalog.feature(expr.dtype.value))
        return
    if isinstance(expr, ColumnRef):
        return
    if isinstance(expr, ScalarSubquery):
        out.add(catalog.feature("SUBQUERY"))
        _statement_features(expr.select, catalog, out)
        return
    parts = _call_parts(expr)
    if parts is None:
        raise TypeError(f"not an expression: {expr!r}")
    name, args = parts
    entry = catalog.get(name)
    out.add(entry.feature)
    if entry.category is FeatureCategory.FUNCTION:
        for i, arg in enumerate(args, start=1):
            dt = dtype_of(arg, catalog)
            if dt in CONCRETE_DTYPES:
                comp = catalog.maybe(composite_identifier(name, i, dt.value))
                if comp is None:
                    raise CatalogError(
                        f"feature not in catalog: {composite_identifier(name, i, dt.value)}"
                    )
                out.add(comp.feature)
    for arg in args:
        _expr_features(arg, catalog, out)


def _statement_features(stmt: Statement, catalog: FeatureCatalog, out: set[FeatureId]) -> None:
    if isinstance(stmt, CreateTable):
        out.add(catalog.feature("TABLE"))
        for col in stmt.columns:
            out.add(catalog.feature(col.dtype.value))
    elif isinstance(stmt, CreateIndex):
        out.add(catalog.feature("INDEX"))
        if stmt.unique:
            out.add(catalog.feature("UNIQUE"))
    elif isinstance(stmt, CreateView):
        out.add(catalog.feature("VIEW"))
        _statement_features(stmt.select, catalog, out)
    elif isinstance(stmt, Insert):
        out.add(catalog.feature("INSERT"))
        for row in stmt.rows:
            for const in row:
                if const.dtype in CONCRETE_DTYPES:
                    out.add(catalog.feature(const.dtype.value))
    elif isinstance(stmt, Analyze):
        out.add(catalog.feature("ANALYZE"))
    elif isinstance(stmt, Select):
        out.add(catalog.feature("SELECT"))
        if stmt.distinct:
            out.add(catalog.feature("DISTINCT"))
        for e in (stmt.projection or ()):
            _expr_features(e, catalog, out)
        if isinstance(stmt.source, Join):
            out.add(catalog.feature(stmt.source.kind))
            if stmt.source.on is not None:
                _expr_features(stmt.source.on, catalog, out)
        if stmt.where is not None:
            out.add(catalog.feature("WHERE"))
            _expr_features(stmt.where, catalog, out)
    else:
        raise TypeError(f"not a statement: {stmt!r}")


def features_of(stmt: Statement, catalog: FeatureCatalog) -> frozenset[FeatureId]:
    """The exact feature set a statement exercises, derived from its AST."""
    out: set[FeatureId] = set()
    _statement_features(stmt, catalog, out)
    if "IMPLICIT_CAST" in catalog and statement_type_violations(stmt, catalog):
        out.add(catalog.feature("IMPLICIT_CAST"))
    return frozenset(out)


# --------------------------------------------------------------------------
# structure helpers (used by the reducer and tests)

def expr_children(expr: Expr) -> tuple[Expr, ...]:
    if isinstance(expr, Unary):
        return (expr.operand,)
    if isinstance(expr, Binary):
        return (expr.left, expr.right)
    if isinstance(expr, (FunctionCall, NaryOp)):
        return expr.args
    if isinstance(expr, CaseWhen):
        return (expr.condition, expr.then, expr.otherwise)
    return ()


def expr_with_child(expr: Expr, index: int, child: Expr) -> Expr:
    if isinstance(expr, Unary):
        return replace(expr, operand=child)
    if isinstance(expr, Binary):
        return replace(expr, left=child) if index == 0 else replace(expr, right=child)
    if isinstance(expr, (FunctionCall, NaryOp)):
        args = list(expr.args)
        args[index] = child
        return replace(expr, args=tuple(args))
    if isinstance(expr, CaseWhen):
        field = ("condition", "then", "otherwise")[index]
        return replace(expr, **{field: child})
    raise TypeError(f"no children: {expr!r}")


def expr_paths(root: Expr) -> Iterator[tuple[tuple[int, ...], Expr]]:
    """Yield (path, node) pairs in breadth-first order; path indexes children."""
    queue: list[tuple[tuple[int, ...], Expr]] = [((), root)]
    while queue:
        path, node = queue.pop(0)
        yield path, node
        for i, child in enumerate(expr_children(node)):
            queue.append((path + (i,), child))


def expr_at(root: Expr, path: tuple[int, ...]) -> Expr:
    node = root
    for i in path:
        node = expr_children(node)[i]
    return node


def expr_replace_at(root: Expr, path: tuple[int, ...], new: Expr) -> Expr:
    if not path:
        return new
    head, rest = path[0], path[1:]
    child = expr_children(root)[head]
    return expr_with_child(root, head, expr_replace_at(child, rest, new))


def expr_depth(expr: Expr) -> int:
    if isinstance(expr, ScalarSubquery):
        inner = [e for e in (expr.select.projection or ())]
        if expr.select.where is not None:
            inner.append(expr.select.where)
        return 1 + max((expr_depth(e) for e in inner), default=0)
    children = expr_children(expr)
    if not children:
        return 1
    return 1 + max(expr_depth(c) for c in children)


def statement_exprs(stmt: Statement) -> list[Expr]:
    if isinstance(stmt, Insert):
        return [c for row in stmt.rows for c in row]
    if isinstance(stmt, CreateView):
        return statement_exprs(stmt.select)
    if isinstance(stmt, Select):
        exprs = list(stmt.projection or ())
        if isinstance(stmt.source, Join) and stmt.source.on is not None:
            exprs.append(stmt.source.on)
        if stmt.where is not None:
            exprs.append(stmt.where)
        return exprs
    return []


def statement_depth(stmt: Statement) -> int:
    return max((expr_depth(e) for e in statement_exprs(stmt)), default=0)
