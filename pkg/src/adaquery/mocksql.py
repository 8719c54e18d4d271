"""Deterministic in-process SQL interpreter with declared feature support.

Serves as controlled ground truth for evaluating the learning loop and the
oracles: feature support is declared up front in a spec file, logic bugs
can be injected as deterministic mis-evaluation rules gated on feature
co-occurrence, and per-feature flakiness can simulate context-dependent
failures. Evaluation follows three-valued SQL semantics over exactly four
cell kinds (Null, Bool, Int, Text).

Spec file grammar (UTF-8, ``#`` comments, section headers in brackets)::

    [typing]
    dynamic                 # or: static

    [supported]
    *                       # everything in the catalog, or explicit ids
    !INDEX                  # exclusions (only meaningful after *)
    !SIN1STRING

    [bugs]
    filter_null_true NULLIF !=      # effect name, then trigger features

    [flaky]
    seed 99
    ASIN 0.5                # feature -> success probability

Bug effects (all deterministic given the statement and database state):

* ``filter_null_true``: WHERE keeps rows whose predicate is NULL.
* ``not_null_true``: NOT NULL evaluates to TRUE instead of NULL.
* ``is_null_false``: ``x IS NULL`` returns FALSE even when x is NULL.
* ``filter_le_as_lt``: a WHERE clause whose top node is ``<=`` filters
  with ``<`` (projection evaluation of the same expression is correct).
* ``nullif_first``: NULLIF returns its first argument unconditionally.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field

from .adapters import (
    SUCCESS,
    DbAdapter,
    ExecutionStatus,
    Outcome,
    QueryResult,
    register_adapter,
)
from .catalog import FeatureCatalog
from .errors import MockSpecError
from .features import FeatureId
from .sqlast import (
    Analyze,
    Binary,
    CaseWhen,
    ColumnRef,
    ColumnSpec,
    Constant,
    CreateIndex,
    CreateTable,
    CreateView,
    DType,
    Expr,
    FunctionCall,
    Insert,
    Join,
    NaryOp,
    ScalarSubquery,
    Select,
    Statement,
    TableRef,
    Unary,
    dtype_of,
    features_of,
    statement_type_violations,
)

EFFECTS = (
    "filter_null_true",
    "not_null_true",
    "is_null_false",
    "filter_le_as_lt",
    "nullif_first",
)


@dataclass(frozen=True)
class BugInjection:
    """A logic bug: fires on statements whose feature set covers the trigger."""

    trigger: frozenset[str]
    effect: str

    def __post_init__(self):
        if self.effect not in EFFECTS:
            raise MockSpecError(f"unknown bug effect {self.effect!r}")
        if not self.trigger:
            raise MockSpecError("bug trigger must name at least one feature")


@dataclass(frozen=True)
class MockDialectSpec:
    supported: frozenset[str]
    typing: str = "dynamic"
    bugs: tuple[BugInjection, ...] = ()
    flaky: tuple[tuple[str, float], ...] = ()
    flaky_seed: int = 0

    def __post_init__(self):
        if self.typing not in ("static", "dynamic"):
            raise MockSpecError(f"typing must be static or dynamic, not {self.typing!r}")
        if self.typing == "static" and "IMPLICIT_CAST" in self.supported:
            raise MockSpecError("a static dialect cannot support IMPLICIT_CAST")
        for bug in self.bugs:
            missing = bug.trigger - self.supported
            if missing:
                raise MockSpecError(
                    f"bug trigger references unsupported features: {sorted(missing)}"
                )
        for fid, prob in self.flaky:
            if fid not in self.supported:
                raise MockSpecError(f"flaky feature not supported: {fid}")
            if not 0.0 <= prob <= 1.0:
                raise MockSpecError(f"flaky probability out of range: {fid} {prob}")


def parse_mock_spec(text: str, catalog: FeatureCatalog, source: str = "<string>") -> MockDialectSpec:
    section = None
    typing = "dynamic"
    star = False
    included: list[str] = []
    excluded: set[str] = set()
    bugs: list[BugInjection] = []
    flaky: list[tuple[str, float]] = []
    flaky_seed = 0

    def check_id(fid: str, line_no: int) -> str:
        if fid not in catalog:
            raise MockSpecError(f"{source}:{line_no}: unknown feature {fid!r}")
        return fid

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in ("typing", "supported", "bugs", "flaky"):
                raise MockSpecError(f"{source}:{line_no}: unknown section {section!r}")
            continue
        if section == "typing":
            typing = line
        elif section == "supported":
            if line == "*":
                star = True
            elif line.startswith("!"):
                excluded.add(check_id(line[1:], line_no))
            else:
                included.append(check_id(line, line_no))
        elif section == "bugs":
            parts = line.split()
            trigger = frozenset(check_id(p, line_no) for p in parts[1:])
            bugs.append(BugInjection(trigger, parts[0]))
        elif section == "flaky":
            parts = line.split()
            if parts[0] == "seed":
                flaky_seed = int(parts[1])
            else:
                flaky.append((check_id(parts[0], line_no), float(parts[1])))
        else:
            raise MockSpecError(f"{source}:{line_no}: content before any section")

    if star:
        supported = {e.identifier for e in catalog} - excluded
        if typing == "static":
            supported.discard("IMPLICIT_CAST")
    else:
        supported = set(included) - excluded
    return MockDialectSpec(
        frozenset(supported), typing, tuple(bugs), tuple(flaky), flaky_seed
    )


def load_mock_spec(path, catalog: FeatureCatalog) -> MockDialectSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_mock_spec(fh.read(), catalog, source=str(path))


def format_mock_spec(
    spec: MockDialectSpec, catalog: FeatureCatalog | None = None
) -> str:
    """Render a spec back to file text (canonical form, sorted ids)."""
    lines = ["[typing]", spec.typing, "", "[supported]"]
    if catalog is not None:
        everything = {e.identifier for e in catalog}
        if spec.typing == "static":
            everything.discard("IMPLICIT_CAST")
        missing = sorted(everything - spec.supported)
        lines.append("*")
        lines.extend(f"!{fid}" for fid in missing)
    else:
        lines.extend(sorted(spec.supported))
    if spec.bugs:
        lines += ["", "[bugs]"]
        for bug in spec.bugs:
            lines.append(" ".join([bug.effect, *sorted(bug.trigger)]))
    if spec.flaky:
        lines += ["", "[flaky]", f"seed {spec.flaky_seed}"]
        for fid, prob in spec.flaky:
            lines.append(f"{fid} {prob}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# tokenizer / parser for the rendered dialect

class MockSqlError(Exception):
    """Statement-level failure: becomes an Error status, never Fatal."""


_SYMBOLS = (
    "<=>", "<<", ">>", "<>", "<=", ">=", "!=", "||",
    "(", ")", ",", ".", "+", "-", "*", "/", "%", "~", "=", "<", ">",
)
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT_RE = re.compile(r"[0-9]+")


def tokenize(text: str) -> list[tuple[str, object]]:
    tokens: list[tuple[str, object]] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\n":
            i += 1
            continue
        if ch == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise MockSqlError("unterminated string literal")
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            tokens.append(("str", "".join(buf)))
            i = j + 1
            continue
        if ch.isdigit():
            m = _INT_RE.match(text, i)
            tokens.append(("int", int(m.group())))
            i = m.end()
            continue
        if ch == "-" and i + 1 < n and text[i + 1].isdigit():
            # a '-' straight before a digit is a negative literal unless the
            # previous token ends an expression (then it is binary minus);
            # uppercase words are keywords/operators, lowercase are idents
            prev = tokens[-1] if tokens else None
            ends_expr = prev is not None and (
                prev[0] in ("int", "str", ")")
                or (
                    prev[0] == "word"
                    and (prev[1] in ("TRUE", "FALSE", "NULL") or prev[1][0].islower())
                )
            )
            if not ends_expr:
                m = _INT_RE.match(text, i + 1)
                tokens.append(("int", -int(m.group())))
                i = m.end()
                continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append((sym, sym))
                i += len(sym)
                break
        else:
            m = _WORD_RE.match(text, i)
            if not m:
                raise MockSqlError(f"unexpected character {ch!r} at {i}")
            tokens.append(("word", m.group()))
            i = m.end()
    return tokens


_BINARY_WORD_OPS = {"AND", "OR", "LIKE"}
_BINARY_SYMBOL_OPS = {"=", "!=", "<>", "<", "<=", ">", ">=", "<=>",
                      "+", "-", "*", "/", "%", "<<", ">>"}
_JOIN_WORDS = {
    "INNER": "INNER_JOIN",
    "LEFT": "LEFT_JOIN",
    "RIGHT": "RIGHT_JOIN",
    "FULL": "FULL_JOIN",
    "CROSS": "CROSS_JOIN",
    "NATURAL": "NATURAL_JOIN",
}
_DTYPE_WORDS = {"INTEGER": DType.INTEGER, "TEXT": DType.TEXT, "BOOLEAN": DType.BOOLEAN}


class _Parser:
    """Recursive-descent parser for the fully parenthesized rendered form."""

    def __init__(self, tokens, resolver, catalog: FeatureCatalog):
        self.tokens = tokens
        self.pos = 0
        self.resolver = resolver
        self.catalog = catalog

    # -- token plumbing ----------------------------------------------------

    def peek(self, offset: int = 0):
        idx = self.pos + offset
        return self.tokens[idx] if idx < len(self.tokens) else (None, None)

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, kind, value=None):
        tok = self.next()
        if tok[0] != kind or (value is not None and tok[1] != value):
            raise MockSqlError(f"expected {value or kind}, got {tok[1]!r}")
        return tok

    def expect_word(self, word: str) -> None:
        self.expect("word", word)

    def at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok[0] == "word" and tok[1] == word

    def ident(self) -> str:
        tok = self.expect("word")
        return tok[1]

    # -- statements ---------------------------------------------------------

    def statement(self) -> Statement:
        if self.at_word("CREATE"):
            return self._create()
        if self.at_word("INSERT"):
            return self._insert()
        if self.at_word("ANALYZE"):
            self.next()
            return Analyze()
        if self.at_word("SELECT"):
            return self._select()
        raise MockSqlError(f"cannot parse statement starting at {self.peek()[1]!r}")

    def _create(self) -> Statement:
        self.expect_word("CREATE")
        if self.at_word("TABLE"):
            self.next()
            name = self.ident()
            self.expect("(")
            columns = []
            while True:
                col = self.ident()
                dtype_word = self.ident()
                if dtype_word not in _DTYPE_WORDS:
                    raise MockSqlError(f"unknown column type {dtype_word!r}")
                columns.append(ColumnSpec(col, _DTYPE_WORDS[dtype_word]))
                if self.peek()[0] == ",":
                    self.next()
                    continue
                break
            self.expect(")")
            return CreateTable(name, tuple(columns))
        unique = False
        if self.at_word("UNIQUE"):
            self.next()
            unique = True
        if self.at_word("INDEX"):
            self.next()
            name = self.ident()
            self.expect_word("ON")
            table = self.ident()
            self.expect("(")
            cols = [self.ident()]
            while self.peek()[0] == ",":
                self.next()
                cols.append(self.ident())
            self.expect(")")
            return CreateIndex(name, table, tuple(cols), unique)
        if self.at_word("VIEW"):
            self.next()
            name = self.ident()
            self.expect("(")
            cols = [self.ident()]
            while self.peek()[0] == ",":
                self.next()
                cols.append(self.ident())
            self.expect(")")
            self.expect_word("AS")
            select = self._select()
            return CreateView(name, tuple(cols), select)
        raise MockSqlError(f"cannot parse CREATE {self.peek()[1]!r}")

    def _insert(self) -> Insert:
        self.expect_word("INSERT")
        self.expect_word("INTO")
        table = self.ident()
        self.expect("(")
        cols = [self.ident()]
        while self.peek()[0] == ",":
            self.next()
            cols.append(self.ident())
        self.expect(")")
        self.expect_word("VALUES")
        rows = []
        while True:
            self.expect("(")
            row = [self._constant()]
            while self.peek()[0] == ",":
                self.next()
                row.append(self._constant())
            self.expect(")")
            rows.append(tuple(row))
            if self.peek()[0] == ",":
                self.next()
                continue
            break
        return Insert(table, tuple(cols), tuple(rows))

    def _constant(self) -> Constant:
        kind, value = self.next()
        if kind == "int":
            return Constant(value, DType.INTEGER)
        if kind == "str":
            return Constant(value, DType.TEXT)
        if kind == "word":
            if value == "NULL":
                return Constant(None, DType.UNTYPED)
            if value == "TRUE":
                return Constant(True, DType.BOOLEAN)
            if value == "FALSE":
                return Constant(False, DType.BOOLEAN)
        raise MockSqlError(f"expected a literal, got {value!r}")

    def _select(self) -> Select:
        self.expect_word("SELECT")
        distinct = False
        if self.at_word("DISTINCT"):
            self.next()
            distinct = True
        projection: tuple[Expr, ...] | None
        if self.peek()[0] == "*":
            self.next()
            projection = None
        else:
            exprs = [self.expression()]
            while self.peek()[0] == ",":
                self.next()
                exprs.append(self.expression())
            projection = tuple(exprs)
        self.expect_word("FROM")
        source = self._source()
        where = None
        if self.at_word("WHERE"):
            self.next()
            where = self.expression()
        return Select(projection, source, where, distinct)

    def _source(self):
        left = self.ident()
        tok = self.peek()
        if tok[0] == "word" and tok[1] in _JOIN_WORDS:
            kind = _JOIN_WORDS[self.next()[1]]
            self.expect_word("JOIN")
            right = self.ident()
            on = None
            if self.at_word("ON"):
                self.next()
                on = self.expression()
            return Join(kind, TableRef(left), TableRef(right), on)
        return TableRef(left)

    # -- expressions ---------------------------------------------------------

    def expression(self) -> Expr:
        kind, value = self.peek()
        if kind == "(":
            return self._parenthesized()
        if kind in ("int", "str"):
            return self._constant()
        if kind == "word":
            if value in ("NULL", "TRUE", "FALSE"):
                return self._constant()
            if self.peek(1)[0] == "(":
                return self._function(value)
            if self.peek(1)[0] == ".":
                self.next()
                self.next()
                column = self.ident()
                return ColumnRef(value, column, self.resolver(value, column))
        raise MockSqlError(f"cannot parse expression at {value!r}")

    def _function(self, name: str) -> FunctionCall:
        entry = self.catalog.maybe(name)
        if entry is None or entry.template == "" or not entry.template.startswith(name):
            raise MockSqlError(f"unknown function {name!r}")
        self.next()
        self.expect("(")
        args = [self.expression()]
        while self.peek()[0] == ",":
            self.next()
            args.append(self.expression())
        self.expect(")")
        return FunctionCall(name, tuple(args))

    def _parenthesized(self) -> Expr:
        self.expect("(")
        if self.at_word("SELECT"):
            select = self._select()
            self.expect_word("ORDER")
            self.expect_word("BY")
            self.expect("int", 1)
            self.expect_word("LIMIT")
            self.expect("int", 1)
            self.expect(")")
            return ScalarSubquery(select)
        if self.at_word("NOT"):
            self.next()
            operand = self.expression()
            self.expect(")")
            return Unary("NOT", operand)
        if self.peek()[0] == "-":
            self.next()
            operand = self.expression()
            self.expect(")")
            return Unary("NEG", operand)
        if self.peek()[0] == "~":
            self.next()
            operand = self.expression()
            self.expect(")")
            return Unary("~", operand)
        if self.at_word("CASE"):
            self.next()
            self.expect_word("WHEN")
            cond = self.expression()
            self.expect_word("THEN")
            then = self.expression()
            self.expect_word("ELSE")
            otherwise = self.expression()
            self.expect_word("END")
            self.expect(")")
            return CaseWhen(cond, then, otherwise)
        left = self.expression()
        kind, value = self.next()
        if kind == "word" and value == "BETWEEN":
            low = self.expression()
            self.expect_word("AND")
            high = self.expression()
            self.expect(")")
            return NaryOp("BETWEEN", (left, low, high))
        if kind == "word" and value == "IS":
            op = "IS"
            if self.at_word("NOT"):
                self.next()
                op = "IS_NOT"
            right = self.expression()
            self.expect(")")
            return Binary(op, left, right)
        if kind == "word" and value in _BINARY_WORD_OPS:
            right = self.expression()
            self.expect(")")
            return Binary(value, left, right)
        if kind == "||":
            right = self.expression()
            self.expect(")")
            return Binary("CONCAT", left, right)
        if kind in _BINARY_SYMBOL_OPS:
            right = self.expression()
            self.expect(")")
            return Binary(kind, left, right)
        raise MockSqlError(f"expected an operator, got {value!r}")


def parse_statement(text: str, resolver, catalog: FeatureCatalog) -> Statement:
    """Parse rendered statement text back into its AST.

    ``resolver(table, column) -> DType`` supplies column types (they are
    not recoverable from the text alone).
    """
    parser = _Parser(tokenize(text), resolver, catalog)
    stmt = parser.statement()
    if parser.pos != len(parser.tokens):
        raise MockSqlError(f"trailing tokens after statement: {parser.peek()[1]!r}")
    return stmt


# --------------------------------------------------------------------------
# evaluation

class MockRuntimeError(MockSqlError):
    """Runtime evaluation failure (e.g. function domain error)."""


def _parse_int_full(s: str) -> int | None:
    if re.fullmatch(r"[+-]?[0-9]+", s):
        return int(s)
    return None


def truthy3(v) -> bool | None:
    """Three-valued truthiness used by WHERE, logic operators and IS TRUE."""
    if v is None:
        return None
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v != 0
    n = _parse_int_full(v)
    return n is not None and n != 0


def _to_int(v) -> int:
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, int):
        return v
    n = _parse_int_full(v)
    return 0 if n is None else n


def _to_text(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return v


def _rank_key(v):
    if isinstance(v, (bool, int)):
        return (0, int(v))
    return (1, v)


def _compare(op: str, a, b) -> bool | None:
    """Comparison under the mock's total value order; NULL propagates.

    Numbers (booleans count as their integer value) order below text;
    values of different kinds are never equal.
    """
    if a is None or b is None:
        return None
    ka, kb = _rank_key(a), _rank_key(b)
    if op == "=":
        return ka == kb
    if op in ("!=", "<>"):
        return ka != kb
    if op == "<":
        return ka < kb
    if op == "<=":
        return ka <= kb
    if op == ">":
        return ka > kb
    if op == ">=":
        return ka >= kb
    raise AssertionError(op)


def _order_key(v):
    if v is None:
        return (0, 0, "")
    if isinstance(v, (bool, int)):
        return (1, int(v), "")
    return (2, 0, v)


def _dist_key(v):
    if v is None:
        return (0, None)
    if isinstance(v, (bool, int)):
        return (1, int(v))
    return (2, v)


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


_MAX_SHIFT = 64
_SIN_ARG_LIMIT = 2**53


@dataclass
class MockTable:
    name: str
    columns: tuple[tuple[str, DType], ...]
    rows: list[tuple] = field(default_factory=list)

    def column_index(self, name: str) -> int:
        for i, (col, _) in enumerate(self.columns):
            if col == name:
                return i
        raise MockSqlError(f"no such column: {self.name}.{name}")


@dataclass
class MockView:
    name: str
    columns: tuple[tuple[str, DType], ...]
    select: Select


@dataclass
class MockIndex:
    name: str
    table: str
    columns: tuple[str, ...]
    unique: bool


class _Evaluator:
    """Evaluates one SELECT against the adapter state.

    ``effects`` holds the names of bug effects active for this statement;
    the reference evaluator passes an empty set.
    """

    def __init__(self, adapter: "MockAdapter", effects: frozenset[str]):
        self.adapter = adapter
        self.effects = effects

    # -- relational layer ---------------------------------------------------

    def _relation_rows(self, name: str) -> tuple[list[tuple[str, str]], list[tuple]]:
        """Returns ([(table, column)...], rows)."""
        table = self.adapter.tables.get(name)
        if table is not None:
            cols = [(name, col) for col, _ in table.columns]
            return cols, list(table.rows)
        view = self.adapter.views.get(name)
        if view is not None:
            rows = self.select_rows(view.select)
            cols = [(name, col) for col, _ in view.columns]
            return cols, rows
        raise MockSqlError(f"no such table: {name}")

    def _source_rows(self, source) -> tuple[list[tuple[str, str]], list[tuple]]:
        if isinstance(source, TableRef):
            return self._relation_rows(source.name)
        lcols, lrows = self._relation_rows(source.left.name)
        rcols, rrows = self._relation_rows(source.right.name)
        cols = lcols + rcols
        kind = source.kind
        if kind in ("CROSS_JOIN", "NATURAL_JOIN"):
            # no shared column names ever exist, so NATURAL degenerates to CROSS
            return cols, [lr + rr for lr in lrows for rr in rrows]
        lnull = (None,) * len(lcols)
        rnull = (None,) * len(rcols)
        matched_right = [False] * len(rrows)
        out: list[tuple] = []
        for lr in lrows:
            hit = False
            for ri, rr in enumerate(rrows):
                row = lr + rr
                if source.on is None:
                    keep = True
                else:
                    env = dict(zip(cols, row))
                    keep = truthy3(self.eval(source.on, env)) is True
                if keep:
                    out.append(row)
                    hit = True
                    matched_right[ri] = True
            if not hit and kind in ("LEFT_JOIN", "FULL_JOIN"):
                out.append(lr + rnull)
        if kind in ("RIGHT_JOIN", "FULL_JOIN"):
            for ri, rr in enumerate(rrows):
                if not matched_right[ri]:
                    out.append(lnull + rr)
        return cols, out

    def _keep_row(self, where: Expr, env) -> bool:
        node = where
        if (
            "filter_le_as_lt" in self.effects
            and isinstance(node, Binary)
            and node.op == "<="
        ):
            node = Binary("<", node.left, node.right)
        t = truthy3(self.eval(node, env))
        if "filter_null_true" in self.effects:
            return t is not False
        return t is True

    def select_rows(self, select: Select) -> list[tuple]:
        cols, rows = self._source_rows(select.source)
        if select.where is not None:
            rows = [
                row
                for row in rows
                if self._keep_row(select.where, dict(zip(cols, row)))
            ]
        if select.projection is None:
            out = rows
        else:
            out = [
                tuple(
                    self.eval(e, dict(zip(cols, row))) for e in select.projection
                )
                for row in rows
            ]
        if select.distinct:
            seen = set()
            deduped = []
            for row in out:
                key = tuple(_dist_key(c) for c in row)
                if key not in seen:
                    seen.add(key)
                    deduped.append(row)
            out = deduped
        return out

    def _scalar_subquery(self, select: Select):
        rows = self.select_rows(select)
        if not rows:
            return None
        return min(rows, key=lambda r: _order_key(r[0]))[0]

    # -- expression layer ----------------------------------------------------

    def eval(self, expr: Expr, env):
        if isinstance(expr, Constant):
            return expr.value
        if isinstance(expr, ColumnRef):
            key = (expr.table, expr.column)
            if key not in env:
                raise MockSqlError(f"unknown column {expr.table}.{expr.column}")
            return env[key]
        if isinstance(expr, ScalarSubquery):
            return self._scalar_subquery(expr.select)
        if isinstance(expr, Unary):
            return self._unary(expr, env)
        if isinstance(expr, Binary):
            return self._binary(expr, env)
        if isinstance(expr, NaryOp):
            a = self.eval(expr.args[0], env)
            lo = self.eval(expr.args[1], env)
            hi = self.eval(expr.args[2], env)
            return _kleene_and(_compare(">=", a, lo), _compare("<=", a, hi))
        if isinstance(expr, CaseWhen):
            if truthy3(self.eval(expr.condition, env)) is True:
                return self.eval(expr.then, env)
            return self.eval(expr.otherwise, env)
        if isinstance(expr, FunctionCall):
            args = [self.eval(a, env) for a in expr.args]
            return self._function(expr.name, args)
        raise MockSqlError(f"cannot evaluate {expr!r}")

    def _unary(self, expr: Unary, env):
        v = self.eval(expr.operand, env)
        if expr.op == "NOT":
            t = truthy3(v)
            if t is None:
                return True if "not_null_true" in self.effects else None
            return not t
        if v is None:
            return None
        if expr.op == "NEG":
            return -_to_int(v)
        if expr.op == "~":
            return ~_to_int(v)
        raise MockSqlError(f"unknown unary operator {expr.op!r}")

    def _binary(self, expr: Binary, env):
        op = expr.op
        a = self.eval(expr.left, env)
        b = self.eval(expr.right, env)
        if op == "AND":
            return _kleene_and(truthy3(a), truthy3(b))
        if op == "OR":
            ta, tb = truthy3(a), truthy3(b)
            if ta is True or tb is True:
                return True
            if ta is None or tb is None:
                return None
            return False
        if op in ("=", "!=", "<>", "<", "<=", ">", ">="):
            return _compare(op, a, b)
        if op == "<=>":
            if a is None and b is None:
                return True
            if a is None or b is None:
                return False
            return _compare("=", a, b)
        if op == "IS":
            return self._is(a, b, expr.right)
        if op == "IS_NOT":
            inner = self._is(a, b, expr.right)
            return not inner
        if op == "CONCAT":
            if a is None or b is None:
                return None
            return _to_text(a) + _to_text(b)
        if op == "LIKE":
            if a is None or b is None:
                return None
            pattern = re.escape(_to_text(b)).replace("%", ".*").replace("_", ".")
            return re.fullmatch(pattern, _to_text(a), re.IGNORECASE) is not None
        if a is None or b is None:
            return None
        ia, ib = _to_int(a), _to_int(b)
        if op == "+":
            return ia + ib
        if op == "-":
            return ia - ib
        if op == "*":
            return ia * ib
        if op == "/":
            return None if ib == 0 else _trunc_div(ia, ib)
        if op == "%":
            return None if ib == 0 else ia - ib * _trunc_div(ia, ib)
        if op in ("<<", ">>"):
            shift = ib
            if shift < 0:
                op = "<<" if op == ">>" else ">>"
                shift = -shift
            if shift > _MAX_SHIFT:
                return 0
            return ia << shift if op == "<<" else ia >> shift
        raise MockSqlError(f"unknown binary operator {op!r}")

    def _is(self, a, b, right_node) -> bool:
        if isinstance(right_node, Constant) and isinstance(right_node.value, bool):
            t = truthy3(a)
            return (t is True) if right_node.value else (t is False)
        if a is None and b is None:
            if "is_null_false" in self.effects and isinstance(right_node, Constant):
                return False
            return True
        if a is None or b is None:
            return False
        return _compare("=", a, b)

    def _function(self, name: str, args: list):
        if name == "QUOTE":
            v = args[0]
            if v is None:
                return "NULL"
            if isinstance(v, bool):
                return "1" if v else "0"
            if isinstance(v, int):
                return str(v)
            return "'" + v.replace("'", "''") + "'"
        if name == "TYPEOF":
            v = args[0]
            if v is None:
                return "null"
            if isinstance(v, bool):
                return "boolean"
            if isinstance(v, int):
                return "integer"
            return "text"
        if name == "COALESCE":
            return args[0] if args[0] is not None else args[1]
        if name == "IIF":
            return args[1] if truthy3(args[0]) is True else args[2]
        if name == "NULLIF":
            if "nullif_first" in self.effects:
                return args[0]
            return None if _compare("=", args[0], args[1]) is True else args[0]
        if name == "HEX":
            return "" if args[0] is None else _to_text(args[0]).encode("utf-8").hex().upper()
        if name == "CHAR":
            if args[0] is None:
                return ""
            code = _to_int(args[0])
            if 1 <= code <= 0x10FFFF and not 0xD800 <= code <= 0xDFFF:
                return chr(code)
            return ""
        if any(a is None for a in args):
            return None
        if name == "ABS":
            return abs(_to_int(args[0]))
        if name == "SIGN":
            v = _to_int(args[0])
            return (v > 0) - (v < 0)
        if name == "SIN":
            v = _to_int(args[0])
            if abs(v) > _SIN_ARG_LIMIT:
                return 0
            return int(round(math.sin(v) * 1_000_000))
        if name == "ASIN":
            v = _to_int(args[0])
            if abs(v) > 1:
                raise MockRuntimeError(f"ASIN argument out of range: {v}")
            return int(round(math.asin(v) * 1_000_000))
        if name == "ROUND":
            return _to_int(args[0])
        if name == "LENGTH":
            return len(_to_text(args[0]))
        if name == "UNICODE":
            s = _to_text(args[0])
            return ord(s[0]) if s else None
        if name == "INSTR":
            return _to_text(args[0]).find(_to_text(args[1])) + 1
        if name == "UPPER":
            return _to_text(args[0]).upper()
        if name == "LOWER":
            return _to_text(args[0]).lower()
        if name == "TRIM":
            return _to_text(args[0]).strip(" ")
        if name == "LTRIM":
            return _to_text(args[0]).lstrip(" ")
        if name == "RTRIM":
            return _to_text(args[0]).rstrip(" ")
        if name == "REPLACE":
            s, find, repl = (_to_text(a) for a in args)
            return s if find == "" else s.replace(find, repl)
        if name == "SUBSTR":
            s = _to_text(args[0])
            start = _to_int(args[1])
            if start > 0:
                return s[start - 1:]
            if start < 0:
                return s[max(len(s) + start, 0):]
            return s
        if name in ("MIN", "MAX"):
            picker = min if name == "MIN" else max
            return picker(args, key=_rank_key)
        raise MockSqlError(f"unknown function {name!r}")


def _kleene_and(ta, tb):
    if ta is False or tb is False:
        return False
    if ta is None or tb is None:
        return None
    return True


# --------------------------------------------------------------------------
# adapter

class MockAdapter(DbAdapter):
    """Executes statements against the mock dialect.

    Accepts either rendered text (parsed back through the dialect grammar)
    or a ``GeneratedStatement``, whose AST and recorded feature set are
    used directly.
    """

    def __init__(self, spec: MockDialectSpec, catalog: FeatureCatalog):
        self.spec = spec
        self.catalog = catalog
        self.tables: dict[str, MockTable] = {}
        self.views: dict[str, MockView] = {}
        self.indexes: dict[str, MockIndex] = {}
        self._flaky_rng = random.Random(spec.flaky_seed)
        self._flaky = dict(spec.flaky)
        self._closed = False

    @property
    def typing_discipline(self) -> str:  # type: ignore[override]
        return self.spec.typing

    # -- plumbing -----------------------------------------------------------

    def _resolve_column(self, table: str, column: str) -> DType:
        t = self.tables.get(table)
        if t is not None:
            for col, dtype in t.columns:
                if col == column:
                    return dtype
        v = self.views.get(table)
        if v is not None:
            for col, dtype in v.columns:
                if col == column:
                    return dtype
        raise MockSqlError(f"unknown column {table}.{column}")

    def _prepare(self, stmt):
        if isinstance(stmt, str):
            ast = parse_statement(stmt, self._resolve_column, self.catalog)
            features = features_of(ast, self.catalog)
        elif hasattr(stmt, "ast"):
            ast = stmt.ast
            features = stmt.features
        else:
            ast = stmt
            features = features_of(ast, self.catalog)
        return ast, features

    def _gate(self, features: frozenset[FeatureId]) -> ExecutionStatus | None:
        ids = {f.identifier for f in features}
        unsupported = sorted(ids - self.spec.supported)
        if unsupported:
            return ExecutionStatus(
                Outcome.ERROR, f"unsupported feature: {unsupported[0]}"
            )
        for fid in sorted(ids & self._flaky.keys()):
            if self._flaky_rng.random() >= self._flaky[fid]:
                return ExecutionStatus(Outcome.ERROR, f"flaky failure: {fid}")
        return None

    def _active_effects(self, feature_ids: set[str]) -> frozenset[str]:
        return frozenset(
            b.effect for b in self.spec.bugs if b.trigger <= feature_ids
        )

    # -- DbAdapter interface --------------------------------------------------

    def execute(self, stmt) -> ExecutionStatus:
        return self._run(stmt, fetch=False).status

    def query(self, stmt) -> QueryResult:
        return self._run(stmt, fetch=True)

    def _run(self, stmt, fetch: bool) -> QueryResult:
        if self._closed:
            return QueryResult(ExecutionStatus(Outcome.FATAL, "adapter closed"))
        try:
            ast, features = self._prepare(stmt)
        except MockSqlError as exc:
            return QueryResult(ExecutionStatus(Outcome.ERROR, str(exc)))
        gate = self._gate(features)
        if gate is not None:
            return QueryResult(gate)
        if self.spec.typing == "static" and statement_type_violations(ast, self.catalog):
            return QueryResult(ExecutionStatus(Outcome.ERROR, "ill-typed expression"))
        try:
            if isinstance(ast, Select):
                effects = self._active_effects({f.identifier for f in features})
                rows = _Evaluator(self, effects).select_rows(ast)
                return QueryResult(SUCCESS, rows if fetch else None)
            self._apply_ddl(ast)
            return QueryResult(SUCCESS)
        except MockSqlError as exc:
            return QueryResult(ExecutionStatus(Outcome.ERROR, str(exc)))

    def _apply_ddl(self, ast: Statement) -> None:
        if isinstance(ast, CreateTable):
            if ast.name in self.tables or ast.name in self.views:
                raise MockSqlError(f"object exists: {ast.name}")
            self.tables[ast.name] = MockTable(
                ast.name, tuple((c.name, c.dtype) for c in ast.columns)
            )
        elif isinstance(ast, CreateIndex):
            if ast.name in self.indexes:
                raise MockSqlError(f"index exists: {ast.name}")
            table = self.tables.get(ast.table)
            if table is None:
                raise MockSqlError(f"no such table: {ast.table}")
            positions = [table.column_index(c) for c in ast.columns]
            if ast.unique:
                self._check_unique(table, positions, ast.name, table.rows, [])
            self.indexes[ast.name] = MockIndex(
                ast.name, ast.table, ast.columns, ast.unique
            )
        elif isinstance(ast, CreateView):
            if ast.name in self.tables or ast.name in self.views:
                raise MockSqlError(f"object exists: {ast.name}")
            if ast.select.projection is None or len(ast.select.projection) != len(
                ast.columns
            ):
                raise MockSqlError("view column list does not match projection")
            cols = tuple(
                (name, dtype_of(expr, self.catalog))
                for name, expr in zip(ast.columns, ast.select.projection)
            )
            self._check_sources(ast.select)
            self.views[ast.name] = MockView(ast.name, cols, ast.select)
        elif isinstance(ast, Insert):
            self._insert(ast)
        elif isinstance(ast, Analyze):
            pass
        else:
            raise MockSqlError(f"cannot execute {type(ast).__name__}")

    def _check_sources(self, select: Select) -> None:
        """Reject selects over missing relations without evaluating data."""
        names = (
            [select.source.name]
            if isinstance(select.source, TableRef)
            else [select.source.left.name, select.source.right.name]
        )
        for name in names:
            if name not in self.tables and name not in self.views:
                raise MockSqlError(f"no such table: {name}")

    def _insert(self, ast: Insert) -> None:
        table = self.tables.get(ast.table)
        if table is None:
            raise MockSqlError(f"no such table: {ast.table}")
        positions = [table.column_index(c) for c in ast.columns]
        width = len(table.columns)
        new_rows = []
        for row in ast.rows:
            if len(row) != len(positions):
                raise MockSqlError("row arity does not match column list")
            full = [None] * width
            for pos, const in zip(positions, row):
                full[pos] = const.value
            new_rows.append(tuple(full))
        for index in self.indexes.values():
            if index.table == ast.table and index.unique:
                key_positions = [table.column_index(c) for c in index.columns]
                self._check_unique(
                    table, key_positions, index.name, table.rows, new_rows
                )
        table.rows.extend(new_rows)

    @staticmethod
    def _check_unique(table, positions, index_name, existing, incoming) -> None:
        seen = set()
        for row in list(existing) + list(incoming):
            key = tuple(row[p] for p in positions)
            if any(cell is None for cell in key):
                continue  # NULLs never collide, like standard SQL
            marked = tuple(_dist_key(cell) for cell in key)
            if marked in seen:
                raise MockSqlError(f"UNIQUE constraint failed: {index_name}")
            seen.add(marked)

    def reset_database(self) -> None:
        self.tables.clear()
        self.views.clear()
        self.indexes.clear()

    def close(self) -> None:
        self._closed = True

    def snapshot(self) -> dict:
        """Canonical schema-object snapshot for mirror comparisons."""
        return {
            "tables": {
                name: tuple((c, d.value) for c, d in t.columns)
                for name, t in self.tables.items()
            },
            "views": {
                name: tuple((c, d.value) for c, d in v.columns)
                for name, v in self.views.items()
            },
            "indexes": {
                name: (i.table, i.columns, i.unique)
                for name, i in self.indexes.items()
            },
        }


def mock_reference_eval(select: Select, adapter: MockAdapter) -> QueryResult:
    """Ground-truth evaluation: same semantics, no injected bugs.

    Errors if the query uses features the adapter's spec does not support,
    mirroring the real query path.
    """
    features = features_of(select, adapter.catalog)
    ids = {f.identifier for f in features}
    unsupported = sorted(ids - adapter.spec.supported)
    if unsupported:
        return QueryResult(
            ExecutionStatus(Outcome.ERROR, f"unsupported feature: {unsupported[0]}")
        )
    try:
        rows = _Evaluator(adapter, frozenset()).select_rows(select)
    except MockSqlError as exc:
        return QueryResult(ExecutionStatus(Outcome.ERROR, str(exc)))
    return QueryResult(SUCCESS, rows)


def _mock_factory(config: str, catalog: FeatureCatalog | None = None) -> MockAdapter:
    if catalog is None:
        from .catalog import default_catalog

        catalog = default_catalog()
    return MockAdapter(load_mock_spec(config, catalog), catalog)


register_adapter("mock", _mock_factory)
