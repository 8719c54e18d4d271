"""Weighted random statement generation driven by learned feature states.

Every decision point with feature-bearing alternatives is a ``ChoiceContext``
whose weights are refreshed from the shared stats store at update
boundaries: alternatives classified Unsupported get weight zero and are
never chosen again. The feature set of each statement is recorded during
generation, choice by choice; re-walking the finished AST must recover
exactly the same set (tested as an invariant).

Typing modes
------------
Static
    Every expression is well-typed against the operator/function
    signatures; predicates are boolean.
Dynamic
    Types are unconstrained; deliberately ill-typed statements carry the
    IMPLICIT_CAST abstract feature (when the catalog declares it), so the
    target's typing discipline is learned like any other feature.
Learn
    Start Dynamic; once IMPLICIT_CAST is classified Unsupported, switch to
    Static permanently.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from . import catalog as cat
from .catalog import CatalogEntry, FeatureCatalog, composite_identifier
from .errors import EmptySchemaError, GenerationError, RuleExhaustedError
from .features import (
    ChoiceContext,
    FeatureCategory,
    FeatureId,
    FeatureState,
    StatsStore,
    choose_alternative,
    redistribute,
)
from .schema import SchemaModel, TableDef
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
    render_statement,
    statement_type_violations,
)


class TypingMode(enum.Enum):
    STATIC = "Static"
    DYNAMIC = "Dynamic"
    LEARN = "Learn"


@dataclass(frozen=True)
class GenConfig:
    max_depth: int = 3
    depth_schedule_interval: int = 100_000
    max_tables: int = 2
    max_views: int = 1
    seed: int = 0
    typing_mode: TypingMode = TypingMode.LEARN

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.depth_schedule_interval < 1:
            raise ValueError("depth_schedule_interval must be >= 1")


def current_depth(executed: int, cfg: GenConfig) -> int:
    """Expression depth budget: starts at 1, +1 per interval, capped."""
    return min(1 + executed // cfg.depth_schedule_interval, cfg.max_depth)


@dataclass(frozen=True)
class GeneratedStatement:
    sql: str
    kind: str
    features: frozenset[FeatureId]
    ast: Statement


@dataclass(frozen=True)
class QueryCase:
    """One oracle-checkable query: ``SELECT * FROM source WHERE predicate``."""

    select: Select
    source: object
    predicate: Expr
    sql: str
    features: frozenset[FeatureId]


# fixed constant pools (boundary-value biased)
_INT_POOL = (-1, 0, 1, 2)
_TEXT_POOL = ("", "a", "b", "ab", "abc", "A", "%a", "_", "x'y")
_NULL_PROBABILITY = 0.08
_LEAF_PROBABILITY = 0.35
_WIDE_INT_PROBABILITY = 0.1

_JOIN_KINDS = ("INNER_JOIN", "LEFT_JOIN", "RIGHT_JOIN", "FULL_JOIN",
               "CROSS_JOIN", "NATURAL_JOIN")
_TOKEN_TO_DTYPE = {token: DType(name) for name, token in cat.COMPOSITE_TOKENS.items()}


def _pseudo(name: str) -> FeatureId:
    """Weight-bearing alternative that is not a catalog feature (never
    recorded, never classified, always live)."""
    return FeatureId(name, FeatureCategory.ABSTRACT_PROPERTY)


_SINGLE = _pseudo("SINGLE-TABLE")
_PLAIN = _pseudo("PLAIN")
_OMIT = _pseudo("OMIT")


class StatementGenerator:
    """One per worker; all randomness flows from the worker's seeded PRNG
    (Python's Mersenne Twister via ``random.Random``)."""

    def __init__(
        self,
        catalog: FeatureCatalog,
        store: StatsStore,
        config: GenConfig,
        schema: SchemaModel,
        rng: random.Random | None = None,
    ):
        self.catalog = catalog
        self.store = store
        self.config = config
        self.schema = schema
        self.rng = rng if rng is not None else random.Random(config.seed)
        self._states: dict[str, FeatureState] = {}
        self._rec: set[FeatureId] = set()
        self._base_contexts = self._build_contexts()
        self._ctx: dict[str, ChoiceContext | None] = {}
        self.refresh_weights()

    # -- context construction ------------------------------------------------

    def _build_contexts(self) -> dict[str, ChoiceContext]:
        catalog = self.catalog
        ctxs: dict[str, ChoiceContext] = {}

        dtypes = [e.feature for e in catalog.by_category(FeatureCategory.DATA_TYPE)]
        ctxs["column-type"] = ChoiceContext.uniform("column-type", dtypes)
        ctxs["constant-type"] = ChoiceContext.uniform("constant-type", dtypes)

        joins = [catalog.feature(k) for k in _JOIN_KINDS if k in catalog]
        ctxs["query-source"] = ChoiceContext.uniform("query-source", [_SINGLE, *joins])

        if "UNIQUE" in catalog:
            ctxs["index-unique"] = ChoiceContext.uniform(
                "index-unique", [catalog.feature("UNIQUE"), _PLAIN]
            )
        if "WHERE" in catalog:
            ctxs["select-where"] = ChoiceContext.uniform(
                "select-where", [catalog.feature("WHERE"), _OMIT]
            )
        if "DISTINCT" in catalog:
            ctxs["select-distinct"] = ChoiceContext.uniform(
                "select-distinct", [catalog.feature("DISTINCT"), _PLAIN]
            )

        def expr_alternatives(result: str | None) -> list[FeatureId]:
            alts = []
            for entry in catalog.expression_entries():
                sig = entry.signature
                if sig is None:
                    continue
                if result is None or sig.result == result or sig.result == cat.SAME:
                    alts.append(entry.feature)
            if "SUBQUERY" in catalog:
                alts.append(catalog.feature("SUBQUERY"))
            return alts

        for dtype in (DType.INTEGER, DType.TEXT, DType.BOOLEAN):
            ctxs[f"expr:{dtype.value}"] = ChoiceContext.uniform(
                f"expr:{dtype.value}", expr_alternatives(dtype.value)
            )
        ctxs["expr:ANY"] = ChoiceContext.uniform("expr:ANY", expr_alternatives(None))

        for entry in catalog.by_category(FeatureCategory.FUNCTION):
            for i in range(1, entry.arity + 1):
                name = f"arg:{entry.identifier}{i}"
                comps = [
                    catalog.feature(composite_identifier(entry.identifier, i, d.value))
                    for d in (DType.INTEGER, DType.TEXT, DType.BOOLEAN)
                ]
                ctxs[name] = ChoiceContext.uniform(name, comps)
        return ctxs

    def refresh_weights(self) -> None:
        """Re-pull feature states and redistribute every rule's weights.

        Called at campaign start and at every update boundary; between
        calls the generator works from this snapshot.
        """
        self._states = self.store.states()
        self._ctx = {}
        for name, base in self._base_contexts.items():
            try:
                self._ctx[name] = redistribute(base, self._states)
            except RuleExhaustedError:
                self._ctx[name] = None

    # -- state helpers --------------------------------------------------------

    def _state(self, identifier: str) -> FeatureState:
        return self._states.get(identifier, FeatureState.UNKNOWN)

    def _dead(self, identifier: str) -> bool:
        return self._state(identifier) is FeatureState.UNSUPPORTED

    def should_generate(self, identifier: str) -> bool:
        """False once the feature is classified Unsupported."""
        return not self._dead(identifier)

    def effective_mode(self) -> TypingMode:
        if self.config.typing_mode is TypingMode.LEARN:
            if self._dead("IMPLICIT_CAST"):
                return TypingMode.STATIC
            return TypingMode.DYNAMIC
        return self.config.typing_mode

    def _pick(self, ctx_name: str) -> str:
        ctx = self._ctx.get(ctx_name)
        if ctx is None:
            raise GenerationError(f"no live alternatives for rule {ctx_name}")
        return choose_alternative(ctx, self.rng).identifier

    def _note(self, identifier: str) -> None:
        self._rec.add(self.catalog.feature(identifier))

    # -- leaves and constants --------------------------------------------------

    def _constant(self, dtype: DType) -> Constant:
        if self.rng.random() < _NULL_PROBABILITY:
            return Constant(None, DType.UNTYPED)
        if self._dead(dtype.value):
            return Constant(None, DType.UNTYPED)
        self._note(dtype.value)
        if dtype is DType.INTEGER:
            if self.rng.random() < _WIDE_INT_PROBABILITY:
                return Constant(self.rng.randint(-(2**31), 2**31 - 1), dtype)
            return Constant(self.rng.choice(_INT_POOL), dtype)
        if dtype is DType.TEXT:
            return Constant(self.rng.choice(_TEXT_POOL), dtype)
        return Constant(self.rng.random() < 0.5, dtype)

    def _columns_of(self, tables: list[TableDef], dtype: DType | None):
        out = []
        for t in tables:
            for c in t.columns:
                if dtype is None or c.dtype is dtype:
                    out.append(ColumnRef(t.name, c.name, c.dtype))
        return out

    def _leaf(self, dtype: DType | None, tables: list[TableDef]) -> Expr:
        if dtype is None:
            dtype = DType(self._pick("constant-type"))
        cols = self._columns_of(tables, dtype)
        if cols and self.rng.random() < 0.6:
            return self.rng.choice(cols)
        return self._constant(dtype)

    def _group_dtype(self) -> DType:
        # which concrete type a polymorphic slot group resolves to; this
        # pick is not itself a feature and is never recorded
        return self.rng.choice((DType.INTEGER, DType.TEXT, DType.BOOLEAN))

    # -- typed expression generation -------------------------------------------

    def _composite_dead(self, func: str, index: int, dtype: DType) -> bool:
        return self._dead(composite_identifier(func, index, dtype.value))

    def _static_arg_dtypes(self, entry: CatalogEntry, target: DType) -> list[DType] | None:
        """Resolve argument dtypes for a signature, or None when the choice
        would force an Unsupported composite feature."""
        sig = entry.signature
        is_func = entry.category is FeatureCategory.FUNCTION
        group: DType | None = target if sig.result == cat.SAME else None
        out: list[DType] = []
        for i, slot in enumerate(sig.args, start=1):
            if slot == cat.SAME:
                if group is None:
                    group = self._group_dtype()
                d = group
            elif slot == cat.ANY:
                candidates = [
                    d
                    for d in (DType.INTEGER, DType.TEXT, DType.BOOLEAN)
                    if not (is_func and self._composite_dead(entry.identifier, i, d))
                ]
                if not candidates:
                    return None
                d = self.rng.choice(candidates)
            else:
                d = DType(slot)
            if is_func and self._composite_dead(entry.identifier, i, d):
                return None
            out.append(d)
        return out

    def _static_expr(self, target: DType, budget: int, tables: list[TableDef]) -> Expr:
        if budget <= 1 or self.rng.random() < _LEAF_PROBABILITY:
            return self._leaf(target, tables)
        ctx_name = f"expr:{target.value}"
        for _ in range(8):
            try:
                picked = self._pick(ctx_name)
            except GenerationError:
                break
            if picked == "SUBQUERY":
                sub = self._subquery(target, budget, tables)
                if sub is not None:
                    return sub
                continue
            entry = self.catalog.get(picked)
            arg_dtypes = self._static_arg_dtypes(entry, target)
            if arg_dtypes is None:
                continue
            if entry.identifier == "CASE":
                args = [
                    self._static_expr(d, budget - 1, tables) for d in arg_dtypes
                ]
                self._note("CASE")
                return CaseWhen(*args)
            args = [self._static_expr(d, budget - 1, tables) for d in arg_dtypes]
            return self._apply(entry, args)
        return self._leaf(target, tables)

    # -- dynamic expression generation -------------------------------------------

    def _dynamic_expr(
        self, budget: int, tables: list[TableDef], target: DType | None = None
    ) -> Expr:
        if budget <= 1 or self.rng.random() < _LEAF_PROBABILITY:
            return self._leaf(target, tables)
        for _ in range(8):
            try:
                picked = self._pick("expr:ANY")
            except GenerationError:
                break
            if picked == "SUBQUERY":
                sub = self._subquery(None, budget, tables)
                if sub is not None:
                    return sub
                continue
            entry = self.catalog.get(picked)
            if entry.identifier == "CASE":
                self._note("CASE")
                return CaseWhen(
                    self._dynamic_expr(budget - 1, tables),
                    self._dynamic_expr(budget - 1, tables),
                    self._dynamic_expr(budget - 1, tables),
                )
            if entry.category is FeatureCategory.FUNCTION:
                args = self._dynamic_function_args(entry, budget, tables)
                if args is None:
                    continue
                return self._apply(entry, args, note_composites=False)
            args = [
                self._dynamic_expr(budget - 1, tables)
                for _ in range(entry.arity)
            ]
            return self._apply(entry, args)
        return self._leaf(target, tables)

    def _dynamic_function_args(
        self, entry: CatalogEntry, budget: int, tables: list[TableDef]
    ) -> list[Expr] | None:
        """Choose per-argument target types through the composite-feature
        contexts, then force any argument that lands on an Unsupported
        composite back to a leaf of the chosen type."""
        args: list[Expr] = []
        for i in range(1, entry.arity + 1):
            ctx = self._ctx.get(f"arg:{entry.identifier}{i}")
            if ctx is None:
                return None
            comp = choose_alternative(ctx, self.rng).identifier
            token = comp[len(entry.identifier) + len(str(i)):]
            target = _TOKEN_TO_DTYPE[token]
            arg = self._dynamic_expr(budget - 1, tables, target)
            actual = dtype_of(arg, self.catalog)
            if actual is not DType.UNTYPED and self._composite_dead(
                entry.identifier, i, actual
            ):
                arg = self._leaf(target, tables)
                actual = dtype_of(arg, self.catalog)
            if actual is not DType.UNTYPED:
                self._note(composite_identifier(entry.identifier, i, actual.value))
            args.append(arg)
        return args

    # -- shared node assembly ---------------------------------------------------

    def _apply(
        self, entry: CatalogEntry, args: list[Expr], note_composites: bool = True
    ) -> Expr:
        name = entry.identifier
        self._note(name)
        if entry.category is FeatureCategory.FUNCTION:
            if note_composites:
                for i, arg in enumerate(args, start=1):
                    d = dtype_of(arg, self.catalog)
                    if d is not DType.UNTYPED:
                        self._note(composite_identifier(name, i, d.value))
            return FunctionCall(name, tuple(args))
        if name == "BETWEEN":
            return NaryOp(name, tuple(args))
        if entry.arity == 1:
            return Unary(name, args[0])
        return Binary(name, args[0], args[1])

    def _subquery(
        self, target: DType | None, budget: int, tables: list[TableDef]
    ) -> Expr | None:
        if not self.schema.relations:
            return None
        inner = self.schema.random_relation(self.rng)
        if target is None:
            proj = self._dynamic_expr(budget - 1, [inner])
        else:
            proj = self._static_expr(target, budget - 1, [inner])
        self._note("SUBQUERY")
        return ScalarSubquery(Select((proj,), TableRef(inner.name)))

    def _expression(self, budget: int, tables: list[TableDef], boolean: bool) -> Expr:
        if self.effective_mode() is TypingMode.STATIC:
            return self._static_expr(
                DType.BOOLEAN if boolean else self._group_dtype(), budget, tables
            )
        return self._dynamic_expr(budget, tables)

    # -- statements ---------------------------------------------------------------

    def generate_statement(self, kind: str, depth: int = 1) -> GeneratedStatement:
        """Build one statement of the given kind (statement feature id:
        TABLE, INDEX, VIEW, INSERT, ANALYZE, or SELECT)."""
        if kind == "SELECT":
            case = self.query_case(depth)
            return GeneratedStatement(case.sql, "Select", case.features, case.select)
        self._rec = set()
        if kind == "TABLE":
            ast: Statement = self._gen_create_table()
        elif kind == "INDEX":
            ast = self._gen_create_index()
        elif kind == "VIEW":
            ast = self._gen_create_view(depth)
        elif kind == "INSERT":
            ast = self._gen_insert()
        elif kind == "ANALYZE":
            ast = self._gen_analyze()
        else:
            raise GenerationError(f"unknown statement kind {kind!r}")
        return self._finish(ast)

    def _finish(self, ast: Statement) -> GeneratedStatement:
        if "IMPLICIT_CAST" in self.catalog and statement_type_violations(
            ast, self.catalog
        ):
            self._note("IMPLICIT_CAST")
        features = frozenset(self._rec)
        return GeneratedStatement(
            render_statement(ast, self.catalog), type(ast).__name__, features, ast
        )

    def _gen_create_table(self) -> CreateTable:
        self._note("TABLE")
        name = self.schema.fresh_name("t")
        cols = []
        for _ in range(self.rng.randint(2, 4)):
            dtype_name = self._pick("column-type")
            self._note(dtype_name)
            cols.append(ColumnSpec(self.schema.fresh_name("c"), DType(dtype_name)))
        return CreateTable(name, tuple(cols))

    def _gen_create_index(self) -> CreateIndex:
        table = self.schema.random_relation(self.rng, base_only=True)
        self._note("INDEX")
        k = self.rng.randint(1, min(2, len(table.columns)))
        cols = [c.name for c in self.rng.sample(list(table.columns), k)]
        unique = False
        if "index-unique" in self._ctx and self._ctx["index-unique"] is not None:
            if self._pick("index-unique") == "UNIQUE":
                self._note("UNIQUE")
                unique = True
        return CreateIndex(self.schema.fresh_name("i"), table.name, tuple(cols), unique)

    def _gen_create_view(self, depth: int) -> CreateView:
        base = self.schema.random_relation(self.rng, base_only=True)
        self._note("VIEW")
        self._note("SELECT")
        nproj = self.rng.randint(1, 2)
        # view bodies stay statically typed so every view column has a
        # concrete type in the schema mirror
        proj = tuple(
            self._static_expr(self._group_dtype(), depth, [base])
            for _ in range(nproj)
        )
        where = None
        if self._ctx.get("select-where") is not None:
            if self._pick("select-where") == "WHERE":
                self._note("WHERE")
                where = self._static_expr(DType.BOOLEAN, depth, [base])
        cols = tuple(self.schema.fresh_name("c") for _ in proj)
        select = Select(proj, TableRef(base.name), where)
        return CreateView(self.schema.fresh_name("v"), cols, select)

    def _gen_insert(self) -> Insert:
        table = self.schema.random_relation(self.rng, base_only=True)
        self._note("INSERT")
        rows = []
        for _ in range(self.rng.randint(1, 10)):
            rows.append(tuple(self._constant(c.dtype) for c in table.columns))
        return Insert(table.name, tuple(c.name for c in table.columns), tuple(rows))

    def _gen_analyze(self) -> Analyze:
        self._note("ANALYZE")
        return Analyze()

    # -- oracle query cases ----------------------------------------------------------

    def query_case(self, depth: int) -> QueryCase:
        """Base query for one oracle check: never DISTINCT, projection ``*``,
        one predicate to partition on."""
        self._rec = set()
        self._note("SELECT")
        source, tables = self._query_source(depth)
        predicate = self._expression(depth, tables, boolean=True)
        self._note("WHERE")
        select = Select(None, source, where=predicate)
        if "IMPLICIT_CAST" in self.catalog and statement_type_violations(
            select, self.catalog
        ):
            self._note("IMPLICIT_CAST")
        return QueryCase(
            select,
            source,
            predicate,
            render_statement(select, self.catalog),
            frozenset(self._rec),
        )

    def _query_source(self, depth: int):
        relations = self.schema.relations
        if not relations:
            raise EmptySchemaError("cannot build a query without relations")
        picked = self._pick("query-source")
        if picked != _SINGLE.identifier and len(relations) >= 2:
            left, right = self.rng.sample(relations, 2)
            self._note(picked)
            on = None
            if picked in ("INNER_JOIN", "LEFT_JOIN", "RIGHT_JOIN", "FULL_JOIN"):
                on = self._expression(max(depth, 2), [left, right], boolean=True)
            return Join(picked, TableRef(left.name), TableRef(right.name), on), [
                left,
                right,
            ]
        table = self.rng.choice(relations)
        return TableRef(table.name), [table]


def feature_walk_matches(stmt: GeneratedStatement, catalog: FeatureCatalog) -> bool:
    """Soundness helper: the recorded set equals the AST walk's set."""
    return features_of(stmt.ast, catalog) == stmt.features
