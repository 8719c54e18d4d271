"""Per-feature execution statistics and Bayesian support inference.

Every generated statement is tagged with the set of grammar features it
exercises. Execution outcomes feed per-feature counters, and at update
boundaries each feature is classified as Supported, Unsupported, or
Unknown. Query-side features use the posterior of a Beta-Binomial model,
DDL-side features use a simple attempt-count rule.
"""

from __future__ import annotations

import enum
import math
import re
import threading
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CatalogError, RuleExhaustedError, StatsParseError

FEATURE_ID_PATTERN = re.compile(r"[A-Z0-9_<>=!+~*/%-]+\Z")

STATS_HEADER = "adaquery-stats v1"


class FeatureCategory(enum.Enum):
    STATEMENT = "Statement"
    CLAUSE_KEYWORD = "ClauseKeyword"
    FUNCTION = "Function"
    OPERATOR = "Operator"
    DATA_TYPE = "DataType"
    COMPOSITE_ARG_TYPE = "CompositeArgType"
    ABSTRACT_PROPERTY = "AbstractProperty"


class FeatureState(enum.Enum):
    UNKNOWN = "Unknown"
    SUPPORTED = "Supported"
    UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class FeatureId:
    """A grammar feature, unique by identifier within a catalog."""

    identifier: str
    category: FeatureCategory

    def __post_init__(self):
        if not FEATURE_ID_PATTERN.match(self.identifier):
            raise CatalogError(f"invalid feature identifier: {self.identifier!r}")

    def __str__(self) -> str:
        return self.identifier


@dataclass
class FeatureStats:
    """Execution counters for one feature.

    ``executions`` counts statements whose feature set contained the
    feature; ``successes`` counts the subset that executed without error.
    ``successes <= executions`` always holds.
    """

    feature: FeatureId
    executions: int = 0
    successes: int = 0
    state: FeatureState = FeatureState.UNKNOWN


@dataclass(frozen=True)
class InferenceConfig:
    """Knobs of the support-inference rules.

    ``confidence`` is fixed by design and deliberately not exposed on the
    command line; it stays a field so tests can exercise the boundary.
    """

    threshold_p: float = 0.01
    confidence: float = 0.95
    ddl_fail_limit: int = 20
    update_interval: int = 100_000

    def __post_init__(self):
        if not 0.0 < self.threshold_p < 1.0:
            raise ValueError("threshold_p must be in (0, 1)")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must be in (0, 1)")
        if self.ddl_fail_limit < 1 or self.update_interval < 1:
            raise ValueError("limits must be positive")


def posterior_params(stats: FeatureStats) -> tuple[int, int]:
    """Beta posterior parameters (a, b) for the feature's success rate.

    With a uniform prior and ``y`` successes out of ``N`` executions the
    posterior is Beta(y + 1, N - y + 1).
    """
    return stats.successes + 1, stats.executions - stats.successes + 1


# Posterior mass below p for Beta(a, b) with integer a, b equals the
# binomial tail sum_{j=a}^{a+b-1} C(a+b-1, j) p^j (1-p)^(a+b-1-j).
# Two routes compute that sum: a cached vectorised row for small N and a
# windowed scalar scan for large N. Both are plain summations of the
# binomial terms; no incomplete-beta library code is involved.

_ROW_PATH_MAX_TRIALS = 4096
_LOG_FLOOR = -745.0  # exp() underflows to 0 below this


@lru_cache(maxsize=512)
def _binomial_tail_row(trials: int, p: float) -> np.ndarray:
    """suffix[j] = sum_{i >= j} C(trials, i) p^i (1-p)^(trials-i), j = 0..trials."""
    if trials == 0:
        return np.ones(1)
    q = 1.0 - p
    log_p, log_q = math.log(p), math.log(q)
    lg = math.lgamma
    lg_total = lg(trials + 1)
    log_terms = np.array(
        [
            lg_total - lg(j + 1) - lg(trials - j + 1) + j * log_p + (trials - j) * log_q
            for j in range(trials + 1)
        ]
    )
    terms = np.exp(log_terms)
    # Summing from the tail keeps relative precision of the small suffixes.
    return np.cumsum(terms[::-1])[::-1]


def _log_term(trials: int, j: int, log_p: float, log_q: float) -> float:
    lg = math.lgamma
    return lg(trials + 1) - lg(j + 1) - lg(trials - j + 1) + j * log_p + (trials - j) * log_q


def _binomial_tail_scalar(trials: int, lo: int, p: float) -> float:
    """Windowed scan of the same sum for large ``trials``.

    Terms decay geometrically away from the mode, so the scan sums from the
    boundary inward and stops once additions can no longer change the
    accumulator.
    """
    if lo <= 0:
        return 1.0
    q = 1.0 - p
    log_p, log_q = math.log(p), math.log(q)
    mode = int((trials + 1) * p)
    if lo > mode:
        lt = _log_term(trials, lo, log_p, log_q)
        if lt < _LOG_FLOOR:
            return 0.0
        term = math.exp(lt)
        total = term
        for j in range(lo + 1, trials + 1):
            term *= (trials - j + 1) / j * (p / q)
            total += term
            if term <= total * 1e-18:
                break
        return min(total, 1.0)
    lt = _log_term(trials, lo - 1, log_p, log_q)
    if lt < _LOG_FLOOR:
        return 1.0
    term = math.exp(lt)
    head = term
    for j in range(lo - 2, -1, -1):
        term *= (j + 1) / (trials - j) * (q / p)
        head += term
        if term <= head * 1e-18:
            break
    return max(1.0 - head, 0.0)


def prob_below_threshold(stats: FeatureStats, threshold_p: float) -> float:
    """Posterior probability that the feature's success rate is below ``threshold_p``.

    Parameters
    ----------
    stats:
        Counters with ``executions`` = N and ``successes`` = y.
    threshold_p:
        Rate in (0, 1) separating "effectively unsupported" from noise.

    Returns
    -------
    float
        I_p(y + 1, N - y + 1), the regularised incomplete beta at the
        threshold, computed as the exact binomial tail sum

            sum_{j=y+1}^{N+1} C(N+1, j) p^j (1-p)^(N+1-j).

    Notes
    -----
    For y = 0 the value reduces to 1 - (1-p)^(N+1): with N = 400 failures
    and p = 0.01 this is 0.98223, so more than 95 percent of the posterior
    mass lies below one percent.
    """
    if not 0.0 < threshold_p < 1.0:
        raise ValueError("threshold_p must be in (0, 1)")
    trials = stats.executions + 1
    lo = stats.successes + 1
    if trials <= _ROW_PATH_MAX_TRIALS:
        row = _binomial_tail_row(trials, threshold_p)
        return float(min(max(row[lo], 0.0), 1.0))
    return _binomial_tail_scalar(trials, lo, threshold_p)


def classify_query_feature(stats: FeatureStats, config: InferenceConfig) -> FeatureState:
    """Bayesian rule for features observed in queries."""
    if stats.executions == 0:
        return FeatureState.UNKNOWN
    if prob_below_threshold(stats, config.threshold_p) >= config.confidence:
        return FeatureState.UNSUPPORTED
    return FeatureState.SUPPORTED

def classify_ddl_feature(stats: FeatureStats, config: InferenceConfig) -> FeatureState:
    """Attempt-count rule for features that only occur in DDL or DML."""
    if stats.successes > 0:
        return FeatureState.SUPPORTED
    if stats.executions >= config.ddl_fail_limit:
        return FeatureState.UNSUPPORTED
    return FeatureState.UNKNOWN


class StatsStore:
    """Shared outcome counters for every catalog feature.

    ``record_outcome`` updates the (executions, successes) pair atomically
    under a lock so campaign workers may share one store. Classification
    only happens when ``reclassify`` is called, which the campaign does at
    update boundaries; an Unsupported verdict is sticky.
    """

    def __init__(self, features: Iterable[FeatureId], ddl_rule_ids: frozenset[str] = frozenset()):
        self._stats: dict[str, FeatureStats] = {
            fid.identifier: FeatureStats(fid) for fid in features
        }
        self._ddl_rule_ids = ddl_rule_ids
        self._lock = threading.Lock()

    def __contains__(self, identifier: str) -> bool:
        return identifier in self._stats

    def __len__(self) -> int:
        return len(self._stats)

    def get(self, identifier: str) -> FeatureStats:
        try:
            return self._stats[identifier]
        except KeyError:
            raise CatalogError(f"feature not in catalog: {identifier}") from None

    def all_stats(self) -> list[FeatureStats]:
        return list(self._stats.values())

    def record_outcome(self, features: Iterable[FeatureId], success: bool) -> None:
        with self._lock:
            for fid in features:
                stats = self._stats.get(fid.identifier)
                if stats is None:
                    raise CatalogError(f"feature not in catalog: {fid.identifier}")
                stats.executions += 1
                if success:
                    stats.successes += 1

    def state(self, identifier: str) -> FeatureState:
        return self.get(identifier).state

    def states(self) -> dict[str, FeatureState]:
        return {name: s.state for name, s in self._stats.items()}

    def reclassify(self, config: InferenceConfig) -> list[str]:
        """Re-run classification on every feature; returns newly unsupported ids."""
        newly_unsupported = []
        with self._lock:
            for name, stats in self._stats.items():
                if stats.state is FeatureState.UNSUPPORTED:
                    continue  # sticky, never rehabilitated
                if name in self._ddl_rule_ids:
                    new_state = classify_ddl_feature(stats, config)
                else:
                    new_state = classify_query_feature(stats, config)
                if new_state is FeatureState.UNSUPPORTED:
                    newly_unsupported.append(name)
                stats.state = new_state
        return newly_unsupported

    def adopt(self, rows: Iterable[tuple[FeatureId, int, int, FeatureState]]) -> None:
        """Overwrite counters and states, e.g. from a persisted stats file."""
        with self._lock:
            for fid, executions, successes, state in rows:
                stats = self._stats.get(fid.identifier)
                if stats is None:
                    raise CatalogError(f"feature not in catalog: {fid.identifier}")
                stats.executions = executions
                stats.successes = successes
                stats.state = state


@dataclass(frozen=True)
class ChoiceContext:
    """One weighted production rule of the generator."""

    rule_name: str
    alternatives: tuple[FeatureId, ...]
    weights: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.alternatives:
            raise ValueError(f"rule {self.rule_name}: no alternatives")
        if not self.weights:
            object.__setattr__(
                self, "weights", (1.0 / len(self.alternatives),) * len(self.alternatives)
            )
        if len(self.weights) != len(self.alternatives):
            raise ValueError(f"rule {self.rule_name}: weight arity mismatch")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"rule {self.rule_name}: weights must sum to 1")

    @classmethod
    def uniform(cls, rule_name: str, alternatives: Sequence[FeatureId]) -> "ChoiceContext":
        return cls(rule_name, tuple(alternatives))


def redistribute(ctx: ChoiceContext, states: Mapping[str, FeatureState]) -> ChoiceContext:
    """Zero out unsupported alternatives and split their mass evenly.

    Every alternative not classified Unsupported receives weight 1/k where
    k is the count of such alternatives. Raises ``RuleExhaustedError`` when
    nothing remains.
    """
    live = [
        states.get(fid.identifier, FeatureState.UNKNOWN) is not FeatureState.UNSUPPORTED
        for fid in ctx.alternatives
    ]
    k = sum(live)
    if k == 0:
        raise RuleExhaustedError(f"rule {ctx.rule_name}: all alternatives unsupported")
    share = 1.0 / k
    return replace(ctx, weights=tuple(share if alive else 0.0 for alive in live))


def choose_alternative(ctx: ChoiceContext, rng) -> FeatureId:
    """Sample one alternative according to the context weights.

    Zero-weight alternatives are never returned, even when floating point
    rounding leaves the cumulative sum marginally short of one.
    """
    r = rng.random()
    cumulative = 0.0
    last_live = None
    for fid, w in zip(ctx.alternatives, ctx.weights):
        if w <= 0.0:
            continue
        last_live = fid
        cumulative += w
        if r < cumulative:
            return fid
    if last_live is None:
        raise RuleExhaustedError(f"rule {ctx.rule_name}: all weights zero")
    return last_live


def persist_stats(store: StatsStore, path) -> None:
    """Write the store as the v1 learned-probabilities format.

    One feature per line, tab separated: identifier, executions, successes,
    state. Lines are sorted by identifier so persisting is canonical and
    byte-stable.
    """
    lines = [STATS_HEADER]
    for stats in sorted(store.all_stats(), key=lambda s: s.feature.identifier):
        lines.append(
            f"{stats.feature.identifier}\t{stats.executions}\t{stats.successes}\t{stats.state.value}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_stats(path, features: Mapping[str, FeatureId]) -> list[tuple[FeatureId, int, int, FeatureState]]:
    """Parse a learned-probabilities file into (feature, N, y, state) rows."""
    states_by_value = {s.value: s for s in FeatureState}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != STATS_HEADER:
            raise StatsParseError(1, f"expected header {STATS_HEADER!r}, got {first!r}")
        for line_no, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise StatsParseError(line_no, f"expected 4 tab-separated fields, got {len(parts)}")
            name, n_text, y_text, state_text = parts
            fid = features.get(name)
            if fid is None:
                raise StatsParseError(line_no, f"feature not in catalog: {name}")
            try:
                executions, successes = int(n_text), int(y_text)
            except ValueError:
                raise StatsParseError(line_no, "counters must be integers") from None
            if executions < 0 or successes < 0 or successes > executions:
                raise StatsParseError(line_no, "requires 0 <= successes <= executions")
            state = states_by_value.get(state_text)
            if state is None:
                raise StatsParseError(line_no, f"unknown state: {state_text}")
            rows.append((fid, executions, successes, state))
    return rows
