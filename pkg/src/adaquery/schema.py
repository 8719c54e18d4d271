"""In-memory mirror of the schema objects created on the target so far.

The campaign applies a DDL statement's effect only after the target reports
success; a rejected CREATE INDEX must leave no trace here. Name counters
are global per object class and never reused, even when the statement that
consumed a name failed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import EmptySchemaError
from .sqlast import (
    CreateIndex,
    CreateTable,
    CreateView,
    DType,
    Insert,
    Statement,
)


@dataclass(frozen=True)
class ColumnDef:
    name: str
    dtype: DType


@dataclass(frozen=True)
class IndexDef:
    name: str
    table: str
    columns: tuple[str, ...]
    unique: bool


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple[ColumnDef, ...]
    is_view: bool = False

    def column(self, name: str) -> ColumnDef:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)

    def columns_of_type(self, dtype: DType) -> tuple[ColumnDef, ...]:
        return tuple(c for c in self.columns if c.dtype is dtype)


@dataclass
class SchemaModel:
    tables: dict[str, TableDef] = field(default_factory=dict)
    indexes: dict[str, IndexDef] = field(default_factory=dict)
    row_counts: dict[str, int] = field(default_factory=dict)
    _counters: dict[str, int] = field(default_factory=dict)

    def fresh_name(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0)
        self._counters[prefix] = n + 1
        return f"{prefix}{n}"

    def reset(self) -> None:
        """Forget all objects (new database) but keep name counters."""
        self.tables.clear()
        self.indexes.clear()
        self.row_counts.clear()

    def apply(self, stmt: Statement, catalog) -> None:
        """Record a successfully executed statement's schema effect."""
        if isinstance(stmt, CreateTable):
            self.tables[stmt.name] = TableDef(
                stmt.name, tuple(ColumnDef(c.name, c.dtype) for c in stmt.columns)
            )
            self.row_counts[stmt.name] = 0
        elif isinstance(stmt, CreateView):
            sel = stmt.select
            assert sel.projection is not None and len(sel.projection) == len(stmt.columns)
            from .sqlast import dtype_of

            cols = tuple(
                ColumnDef(name, dtype_of(expr, catalog))
                for name, expr in zip(stmt.columns, sel.projection)
            )
            self.tables[stmt.name] = TableDef(stmt.name, cols, is_view=True)
        elif isinstance(stmt, CreateIndex):
            self.indexes[stmt.name] = IndexDef(
                stmt.name, stmt.table, stmt.columns, stmt.unique
            )
        elif isinstance(stmt, Insert):
            if stmt.table in self.row_counts:
                self.row_counts[stmt.table] += len(stmt.rows)

    def snapshot(self) -> dict:
        """Canonical schema-object snapshot, comparable to an adapter's."""
        return {
            "tables": {
                t.name: tuple((c.name, c.dtype.value) for c in t.columns)
                for t in self.tables.values()
                if not t.is_view
            },
            "views": {
                t.name: tuple((c.name, c.dtype.value) for c in t.columns)
                for t in self.tables.values()
                if t.is_view
            },
            "indexes": {
                i.name: (i.table, i.columns, i.unique)
                for i in self.indexes.values()
            },
        }

    # -- queries used by the generator ------------------------------------

    @property
    def base_tables(self) -> list[TableDef]:
        return [t for t in self.tables.values() if not t.is_view]

    @property
    def relations(self) -> list[TableDef]:
        return list(self.tables.values())

    def relation(self, name: str) -> TableDef:
        try:
            return self.tables[name]
        except KeyError:
            raise EmptySchemaError(f"unknown relation: {name}") from None

    def random_relation(self, rng: random.Random, base_only: bool = False) -> TableDef:
        pool = self.base_tables if base_only else self.relations
        if not pool:
            raise EmptySchemaError("no relations to pick from")
        return pool[rng.randrange(len(pool))]

    def random_column(
        self,
        rng: random.Random,
        table: TableDef,
        dtype: DType | None = None,
    ) -> ColumnDef:
        pool = table.columns if dtype is None else table.columns_of_type(dtype)
        if not pool:
            raise EmptySchemaError(
                f"{table.name} has no column of type {dtype.value if dtype else 'any'}"
            )
        return pool[rng.randrange(len(pool))]
