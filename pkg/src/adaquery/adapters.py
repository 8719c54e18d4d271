"""Execution interface over test targets plus the SQLite adapter.

A target accepts statement text (or a pre-built ``GeneratedStatement``) and
reports one of three outcomes: Success, Error (statement rejected or failed
at runtime; the campaign continues and learns from it), or Fatal (the
session itself is gone; the campaign aborts). Query results come back as
multisets of rows over exactly four cell kinds: Null, Int, Bool, Text.
Engines that produce other value kinds must normalize at this boundary.
"""

from __future__ import annotations

import enum
import sqlite3
from dataclasses import dataclass
from typing import Callable

from .errors import TargetError


class Outcome(enum.Enum):
    SUCCESS = "Success"
    ERROR = "Error"
    FATAL = "Fatal"


@dataclass(frozen=True)
class ExecutionStatus:
    outcome: Outcome
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.outcome is Outcome.SUCCESS


SUCCESS = ExecutionStatus(Outcome.SUCCESS)

Row = tuple
ResultSet = list


@dataclass
class QueryResult:
    status: ExecutionStatus
    rows: ResultSet | None = None

    @property
    def ok(self) -> bool:
        return self.status.ok


class DbAdapter:
    """Extension point: subclass, implement four methods, register a scheme.

    ``execute``/``query`` take either rendered SQL text or a
    ``GeneratedStatement`` (whose ``.sql`` is used; in-process targets may
    use ``.ast`` to skip re-parsing).
    """

    #: "static" or "dynamic"; drives result-cell normalization in oracles.
    typing_discipline = "dynamic"

    def execute(self, stmt) -> ExecutionStatus:
        raise NotImplementedError

    def query(self, stmt) -> QueryResult:
        raise NotImplementedError

    def reset_database(self) -> None:
        """Drop all state; the next round starts from an empty database."""
        raise NotImplementedError

    def post_setup_hook(self) -> None:
        """Called once after the setup phase of each round (e.g. COMMIT)."""

    def close(self) -> None:
        pass


def _stmt_text(stmt) -> str:
    return stmt if isinstance(stmt, str) else stmt.sql


class SQLiteAdapter(DbAdapter):
    """In-process target backed by the sqlite3 stdlib module.

    Cell normalization: floats arrive only from engine-side numeric
    widening (e.g. trig functions, overflow) and are folded to Text via
    ``repr`` so comparisons stay exact and deterministic.
    """

    typing_discipline = "dynamic"

    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._conn: sqlite3.Connection | None = None
        self._open()

    def _open(self) -> None:
        self._conn = sqlite3.connect(self.path)

    def _run(self, sql: str, fetch: bool):
        if self._conn is None:
            return ExecutionStatus(Outcome.FATAL, "connection closed"), None
        try:
            cur = self._conn.execute(sql)
            rows = cur.fetchall() if fetch else None
            return SUCCESS, rows
        except sqlite3.ProgrammingError as exc:
            return ExecutionStatus(Outcome.FATAL, str(exc)), None
        except sqlite3.Error as exc:
            return ExecutionStatus(Outcome.ERROR, str(exc)), None

    def execute(self, stmt) -> ExecutionStatus:
        status, _ = self._run(_stmt_text(stmt), fetch=False)
        return status

    def query(self, stmt) -> QueryResult:
        status, raw = self._run(_stmt_text(stmt), fetch=True)
        if not status.ok:
            return QueryResult(status)
        rows = [tuple(_normalize_cell(c) for c in row) for row in raw]
        return QueryResult(status, rows)

    def reset_database(self) -> None:
        if self._conn is not None:
            self._conn.close()
        if self.path != ":memory:":
            import os

            try:
                os.unlink(self.path)
            except FileNotFoundError:
                pass
        self._open()

    def close(self) -> None:
        if self._conn is not None:
            self._conn.close()
            self._conn = None


def _normalize_cell(cell):
    if isinstance(cell, float):
        return repr(cell)
    if isinstance(cell, (bytes, memoryview)):
        return bytes(cell).hex()
    return cell


# --------------------------------------------------------------------------
# target registry: scheme -> factory(config_string, catalog) -> DbAdapter

_REGISTRY: dict[str, Callable[..., DbAdapter]] = {}


def register_adapter(scheme: str, factory: Callable[..., DbAdapter]) -> None:
    """Register ``factory(config_string, catalog)`` under a target scheme."""
    _REGISTRY[scheme] = factory


def open_target(target: str, catalog=None) -> DbAdapter:
    """Open ``scheme:config`` target strings, e.g. ``sqlite::memory:`` or
    ``mock:path/to/spec.txt``."""
    scheme, sep, config = target.partition(":")
    if not sep:
        raise TargetError(f"target must look like scheme:config, got {target!r}")
    factory = _REGISTRY.get(scheme)
    if factory is None:
        raise TargetError(f"unknown target scheme {scheme!r}")
    return factory(config, catalog)


register_adapter("sqlite", lambda config, catalog=None: SQLiteAdapter(config))
