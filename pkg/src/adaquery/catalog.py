"""Feature catalog: the inventory of generatable SQL grammar features.

The catalog ships as data (``data/catalog.tsv``), one feature per line::

    CATEGORY <TAB> FEATURE_ID <TAB> TEMPLATE

Template meaning by category:

* Operator / Function: the render pattern; ``{0}``, ``{1}``, ... mark
  operand positions and determine the arity.
* ClauseKeyword: the keyword text; join keywords and ``WHERE {0}`` are used
  verbatim when rendering, the rest is informational.
* DataType: the SQL type name emitted in column definitions.
* Statement / AbstractProperty: informational only; statement rendering is
  structural.

Composite argument-type features (``SIN1INT``, ``SIN1STRING``, ...) are
derived automatically for every function argument position, so argument
types are learned from execution feedback rather than declared per target.
Operand type signatures used for *typed* generation live in
``SIGNATURES``; catalog entries without one get a fully polymorphic
default.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterator, Mapping, Sequence

from .errors import CatalogError
from .features import FeatureCategory, FeatureId

# Signature atoms: the three concrete types, SAME (one shared polymorphic
# group per call site) and ANY (each argument independent, result fixed).
INTEGER, TEXT, BOOLEAN = "INTEGER", "TEXT", "BOOLEAN"
SAME, ANY = "SAME", "ANY"

COMPOSITE_TOKENS: Mapping[str, str] = {INTEGER: "INT", TEXT: "STRING", BOOLEAN: "BOOL"}


@dataclass(frozen=True)
class Signature:
    args: tuple[str, ...]
    result: str


_CMP = Signature((SAME, SAME), BOOLEAN)
_ARITH = Signature((INTEGER, INTEGER), INTEGER)

SIGNATURES: dict[str, Signature] = {
    "=": _CMP,
    "!=": _CMP,
    "<>": _CMP,
    "<": _CMP,
    "<=": _CMP,
    ">": _CMP,
    ">=": _CMP,
    "<=>": _CMP,
    "IS": Signature((ANY, ANY), BOOLEAN),
    "IS_NOT": Signature((ANY, ANY), BOOLEAN),
    "AND": Signature((BOOLEAN, BOOLEAN), BOOLEAN),
    "OR": Signature((BOOLEAN, BOOLEAN), BOOLEAN),
    "NOT": Signature((BOOLEAN,), BOOLEAN),
    "+": _ARITH,
    "-": _ARITH,
    "*": _ARITH,
    "/": _ARITH,
    "%": _ARITH,
    "<<": _ARITH,
    ">>": _ARITH,
    "NEG": Signature((INTEGER,), INTEGER),
    "~": Signature((INTEGER,), INTEGER),
    "CONCAT": Signature((TEXT, TEXT), TEXT),
    "LIKE": Signature((TEXT, TEXT), BOOLEAN),
    "BETWEEN": Signature((INTEGER, INTEGER, INTEGER), BOOLEAN),
    "CASE": Signature((BOOLEAN, SAME, SAME), SAME),
    "ABS": Signature((INTEGER,), INTEGER),
    "SIGN": Signature((INTEGER,), INTEGER),
    "SIN": Signature((INTEGER,), INTEGER),
    "ASIN": Signature((INTEGER,), INTEGER),
    "ROUND": Signature((INTEGER,), INTEGER),
    "LENGTH": Signature((TEXT,), INTEGER),
    "UNICODE": Signature((TEXT,), INTEGER),
    "INSTR": Signature((TEXT, TEXT), INTEGER),
    "UPPER": Signature((TEXT,), TEXT),
    "LOWER": Signature((TEXT,), TEXT),
    "TRIM": Signature((TEXT,), TEXT),
    "LTRIM": Signature((TEXT,), TEXT),
    "RTRIM": Signature((TEXT,), TEXT),
    "HEX": Signature((TEXT,), TEXT),
    "CHAR": Signature((INTEGER,), TEXT),
    "QUOTE": Signature((ANY,), TEXT),
    "TYPEOF": Signature((ANY,), TEXT),
    "REPLACE": Signature((TEXT, TEXT, TEXT), TEXT),
    "SUBSTR": Signature((TEXT, INTEGER), TEXT),
    "NULLIF": Signature((SAME, SAME), SAME),
    "COALESCE": Signature((SAME, SAME), SAME),
    "IIF": Signature((BOOLEAN, SAME, SAME), SAME),
    "MIN": Signature((SAME, SAME), SAME),
    "MAX": Signature((SAME, SAME), SAME),
}

_PLACEHOLDER = re.compile(r"\{(\d+)\}")

_CATEGORY_BY_NAME = {c.value: c for c in FeatureCategory}


@dataclass(frozen=True)
class CatalogEntry:
    feature: FeatureId
    template: str
    arity: int
    signature: Signature | None

    @property
    def identifier(self) -> str:
        return self.feature.identifier

    @property
    def category(self) -> FeatureCategory:
        return self.feature.category


def _template_arity(template: str) -> int:
    indexes = [int(m) for m in _PLACEHOLDER.findall(template)]
    return max(indexes) + 1 if indexes else 0


def _make_entry(category: FeatureCategory, identifier: str, template: str) -> CatalogEntry:
    fid = FeatureId(identifier, category)
    arity = _template_arity(template)
    signature = None
    if category in (FeatureCategory.OPERATOR, FeatureCategory.FUNCTION):
        signature = SIGNATURES.get(identifier)
        if signature is None:
            signature = Signature((SAME,) * arity, SAME)
        if len(signature.args) != arity:
            raise CatalogError(
                f"{identifier}: template arity {arity} does not match signature"
            )
    return CatalogEntry(fid, template, arity, signature)


def composite_identifier(function_name: str, arg_index: int, dtype_name: str) -> str:
    """Identifier of the learned arg-type feature, e.g. ('SIN', 1, TEXT) -> SIN1STRING."""
    return f"{function_name}{arg_index}{COMPOSITE_TOKENS[dtype_name]}"


class FeatureCatalog:
    """Ordered, immutable-by-convention collection of catalog entries."""

    def __init__(self, entries: Sequence[CatalogEntry]):
        self._entries: dict[str, CatalogEntry] = {}
        for entry in entries:
            if entry.identifier in self._entries:
                raise CatalogError(f"duplicate feature: {entry.identifier}")
            self._entries[entry.identifier] = entry
        for entry in list(self._entries.values()):
            if entry.category is not FeatureCategory.FUNCTION:
                continue
            for i in range(1, entry.arity + 1):
                for dtype_name in COMPOSITE_TOKENS:
                    name = composite_identifier(entry.identifier, i, dtype_name)
                    if name not in self._entries:
                        self._entries[name] = CatalogEntry(
                            FeatureId(name, FeatureCategory.COMPOSITE_ARG_TYPE), "", 0, None
                        )
        self._ids = {name: e.feature for name, e in self._entries.items()}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, identifier: str) -> bool:
        return identifier in self._entries

    def __iter__(self) -> Iterator[CatalogEntry]:
        return iter(self._entries.values())

    def get(self, identifier: str) -> CatalogEntry:
        entry = self._entries.get(identifier)
        if entry is None:
            raise CatalogError(f"feature not in catalog: {identifier}")
        return entry

    def maybe(self, identifier: str) -> CatalogEntry | None:
        return self._entries.get(identifier)

    def feature(self, identifier: str) -> FeatureId:
        return self.get(identifier).feature

    @property
    def ids(self) -> Mapping[str, FeatureId]:
        return self._ids

    def features(self) -> list[FeatureId]:
        return [e.feature for e in self._entries.values()]

    def by_category(self, category: FeatureCategory) -> list[CatalogEntry]:
        return [e for e in self._entries.values() if e.category is category]

    def expression_entries(self) -> list[CatalogEntry]:
        return [
            e
            for e in self._entries.values()
            if e.category in (FeatureCategory.OPERATOR, FeatureCategory.FUNCTION)
        ]

    @property
    def ddl_rule_ids(self) -> frozenset[str]:
        """Features classified by the attempt-count rule: they can only
        appear in DDL or DML statements."""
        ids = {
            e.identifier
            for e in self.by_category(FeatureCategory.STATEMENT)
            if e.identifier != "SELECT"
        }
        if "UNIQUE" in self._entries:
            ids.add("UNIQUE")
        return frozenset(ids)

    def subset(self, identifiers: Sequence[str]) -> "FeatureCatalog":
        """New catalog containing exactly the named entries (no composite
        auto-fill beyond what the names request)."""
        catalog = FeatureCatalog.__new__(FeatureCatalog)
        catalog._entries = {name: self.get(name) for name in identifiers}
        catalog._ids = {name: e.feature for name, e in catalog._entries.items()}
        return catalog


def parse_catalog(text: str, source: str = "<string>") -> FeatureCatalog:
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) == 2:
            parts.append("")  # template is optional
        if len(parts) != 3:
            raise CatalogError(f"{source}:{line_no}: expected 2 or 3 tab-separated fields")
        category_name, identifier, template = parts
        category = _CATEGORY_BY_NAME.get(category_name)
        if category is None:
            raise CatalogError(f"{source}:{line_no}: unknown category {category_name!r}")
        entries.append(_make_entry(category, identifier, template))
    return FeatureCatalog(entries)


def load_catalog(path) -> FeatureCatalog:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_catalog(fh.read(), source=str(path))


@lru_cache(maxsize=1)
def default_catalog() -> FeatureCatalog:
    text = resources.files("adaquery").joinpath("data/catalog.tsv").read_text("utf-8")
    return parse_catalog(text, source="data/catalog.tsv")
