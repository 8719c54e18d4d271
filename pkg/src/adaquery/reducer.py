"""Shrinks bug-inducing test cases while preserving the oracle failure.

Phases, all bounded by one global replay budget (default 1000 executions):

1. Delta debugging (ddmin) over the setup statement list, yielding a
   subsequence that is 1-minimal: removing any single remaining statement
   breaks reproduction.
2. Source flattening: when the query reads from a join, try each joined
   table alone.
3. Greedy subtree hoisting over the filter predicate and, when the source
   is a join, over its join condition: replace any node by one of its
   children, by NULL, or by a small literal, keeping each replacement
   only if the oracle still fails. NULL is tried first since it carries
   no feature and turns whole-row predicates into NULL witnesses, which
   in turn lets joins flatten. Binary nodes may also be rotated (operand
   renesting that preserves the operator multiset) when that strictly
   lowers the number of type violations, so incidental implicit casts
   pinned by operand shape can be rewritten away.
4. A final ddmin pass, since flattening and hoisting can free setup
   statements (e.g. the second table of a dropped join).

Every replay runs against a fresh database instance (the caller's replay
function owns that); a case that does not reproduce on the first replay is
returned unchanged and flagged unreduced.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .catalog import FeatureCatalog
from .oracles import FAIL, OracleCheck
from .sqlast import (
    Binary,
    ColumnRef,
    Constant,
    DType,
    Expr,
    Join,
    call_violates_signature,
    dtype_of,
    expr_children,
    expr_paths,
    expr_replace_at,
)

ReplayFn = Callable[[Sequence, object, Expr], OracleCheck]


@dataclass(frozen=True)
class ReducedCase:
    setup: tuple
    source: object
    predicate: Expr
    check: OracleCheck
    reduced: bool
    replays_used: int


class _Budget:
    def __init__(self, limit: int):
        self.remaining = limit
        self.used = 0

    def take(self) -> bool:
        if self.remaining <= 0:
            return False
        self.remaining -= 1
        self.used += 1
        return True


def _ddmin(items: list, test: Callable[[list], bool], budget: _Budget) -> list:
    n = 2
    while len(items) >= 2:
        chunk = max(1, len(items) // n)
        subsets = [items[i : i + chunk] for i in range(0, len(items), chunk)]
        progressed = False
        for i in range(len(subsets)):
            complement = [x for j, s in enumerate(subsets) if j != i for x in s]
            if not complement:
                continue
            if not budget.take():
                return items
            if test(complement):
                items = complement
                n = max(n - 1, 2)
                progressed = True
                break
        if not progressed:
            if n >= len(items):
                break
            n = min(len(items), n * 2)
    return items


_NULL = Constant(None, DType.UNTYPED)
_ZERO = Constant(0, DType.INTEGER)
_ONE = Constant(1, DType.INTEGER)


def _literal_candidates(node: Expr, catalog: FeatureCatalog) -> list[Expr]:
    # NULL first: it carries no feature and preserves null-driven witnesses
    if isinstance(node, Constant):
        if node.value is None:
            return []
        out: list[Expr] = [_NULL]
        if node.dtype is not DType.INTEGER or node.value not in (0, 1):
            out += [_ZERO, _ONE]
        return out
    if isinstance(node, ColumnRef):
        return [_NULL, _ZERO, _ONE]
    out = [_NULL]
    dtype = dtype_of(node, catalog)
    if dtype is DType.INTEGER:
        out += [_ZERO, _ONE]
    elif dtype is DType.TEXT:
        out.append(Constant("a", DType.TEXT))
    elif dtype is DType.BOOLEAN:
        out.append(Constant(True, DType.BOOLEAN))
    return out


def _rotations(node: Expr) -> list[Expr]:
    if not isinstance(node, Binary):
        return []
    out: list[Expr] = []
    if isinstance(node.left, Binary):
        inner = node.left
        out.append(
            Binary(inner.op, inner.left, Binary(node.op, inner.right, node.right))
        )
    if isinstance(node.right, Binary):
        inner = node.right
        out.append(
            Binary(inner.op, Binary(node.op, node.left, inner.left), inner.right)
        )
    return out


def _predicate_violations(expr: Expr, catalog: FeatureCatalog) -> int:
    count = 0 if dtype_of(expr, catalog) in (DType.BOOLEAN, DType.UNTYPED) else 1
    for _, node in expr_paths(expr):
        if call_violates_signature(node, catalog):
            count += 1
    return count


class _Shrinker:
    def __init__(self, replay: ReplayFn, catalog: FeatureCatalog, budget: _Budget):
        self.replay = replay
        self.catalog = catalog
        self.budget = budget
        self.best_check: OracleCheck | None = None

    def attempt(self, setup, source, predicate) -> bool:
        if not self.budget.take():
            return False
        check = self.replay(setup, source, predicate)
        if check.status == FAIL:
            self.best_check = check
            return True
        return False

    def ddmin_setup(self, setup: list, source, predicate) -> list:
        def test(subset: list) -> bool:
            result = self.replay(subset, source, predicate)
            if result.status == FAIL:
                self.best_check = result
                return True
            return False

        return _ddmin(setup, test, self.budget)

    def flatten_source(self, setup, source, predicate):
        if not isinstance(source, Join):
            return source
        for candidate in (source.left, source.right):
            if self.attempt(setup, candidate, predicate):
                return candidate
        return source

    def _hoist_tree(
        self, root: Expr, try_replace: Callable[[Expr], bool]
    ) -> tuple[Expr, bool]:
        base_violations = _predicate_violations(root, self.catalog)
        for path, node in expr_paths(root):
            candidates = list(expr_children(node)) + _literal_candidates(
                node, self.catalog
            )
            for cand in candidates:
                replacement = expr_replace_at(root, path, cand)
                if try_replace(replacement):
                    return replacement, True
            # rotations restructure without shrinking, so only keep one when
            # it strictly lowers the type-violation count (guarantees progress)
            for cand in _rotations(node):
                replacement = expr_replace_at(root, path, cand)
                if _predicate_violations(
                    replacement, self.catalog
                ) < base_violations and try_replace(replacement):
                    return replacement, True
        return root, False

    def hoist(self, setup, source, predicate: Expr):
        improved = True
        while improved:
            predicate, improved = self._hoist_tree(
                predicate, lambda e: self.attempt(setup, source, e)
            )
            if improved:
                continue
            if isinstance(source, Join) and source.on is not None:
                cond, improved = self._hoist_tree(
                    source.on,
                    lambda e: self.attempt(setup, replace(source, on=e), predicate),
                )
                if improved:
                    source = replace(source, on=cond)
        return source, predicate


def reduce_case(
    setup: Sequence,
    source,
    predicate: Expr,
    check: OracleCheck,
    replay: ReplayFn,
    catalog: FeatureCatalog,
    max_replays: int = 1000,
) -> ReducedCase:
    """Shrink (setup, source, predicate) while replay keeps failing.

    ``replay(setup, source, predicate)`` must rebuild the oracle check from
    scratch on a fresh database. Returns the original flagged unreduced
    when the failure does not replay deterministically.
    """
    budget = _Budget(max_replays)
    shrinker = _Shrinker(replay, catalog, budget)
    setup = list(setup)
    if not shrinker.attempt(setup, source, predicate):
        return ReducedCase(
            tuple(setup), source, predicate, check, False, budget.used
        )
    changed = True
    while changed and budget.remaining > 0:
        changed = False
        smaller = shrinker.ddmin_setup(setup, source, predicate)
        if len(smaller) < len(setup):
            setup, changed = smaller, True
        flattened = shrinker.flatten_source(setup, source, predicate)
        if flattened is not source:
            source, changed = flattened, True
        hoist_source, hoisted = shrinker.hoist(setup, source, predicate)
        if hoisted != predicate or hoist_source is not source:
            source, predicate, changed = hoist_source, hoisted, True
    final = shrinker.best_check if shrinker.best_check is not None else check
    return ReducedCase(tuple(setup), source, predicate, final, True, budget.used)
