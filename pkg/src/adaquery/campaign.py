"""End-to-end testing campaigns: state setup, oracle checks, feedback.

A campaign runs one or more deterministic worker lanes round-robin. Each
lane owns its database (adapter), schema mirror, and PRNG; feature
statistics are shared across lanes unless isolated. Per round a lane
creates up to ``max_tables`` tables, populates them with INSERTs,
optionally adds a view, indexes and ANALYZE, then issues oracle checks
until the per-database check quota is reached and the database is dropped.

Every executed statement feeds the feature statistics. Every
``interval`` statements (the update boundary) the campaign reclassifies
features, refreshes generator weights, advances the depth schedule, and
emits one metrics window. Failing checks are reduced out-of-band (replays
do not count toward the budget or the statistics), classified against the
bug history, and written as report directories.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from pathlib import Path

from .adapters import DbAdapter, Outcome, open_target
from .catalog import FeatureCatalog
from .errors import EmptySchemaError, TargetError
from .features import (
    InferenceConfig,
    StatsStore,
    load_stats,
    persist_stats,
)
from .generator import (
    GenConfig,
    GeneratedStatement,
    QueryCase,
    StatementGenerator,
    current_depth,
)
from .mocksql import MockAdapter, load_mock_spec
from .oracles import FAIL, OracleCheck, run_oracle, wrap_statement
from .prioritizer import (
    NEW,
    BugRecord,
    HistoryStore,
    write_report,
)
from .reducer import reduce_case
from .schema import SchemaModel
from .sqlast import Select, render_statement

METRICS_HEADER = "window\texecuted\tsucceeded\tvalidity\tbugs_new\tbugs_dup"

# features an oracle's derived queries introduce beyond the case's own
_ORACLE_WRAPPERS = {"tlp": ("NOT", "IS"), "norec": ("IS", "BOOLEAN")}


@dataclass(frozen=True)
class CampaignConfig:
    oracle: str = "both"
    seed: int = 0
    interval: int = 2000
    budget: int | None = 20000
    duration: float | None = None
    workers: int = 1
    out_dir: str = "out"
    stats_path: str | None = None
    feedback: bool = True
    isolate_stats: bool = False
    checks_per_database: int = 2000
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    generation: GenConfig = field(default_factory=GenConfig)

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.budget is None and self.duration is None:
            raise ValueError("either budget or duration must be set")
        if self.oracle not in ("tlp", "norec", "both"):
            raise ValueError(f"unknown oracle {self.oracle!r}")


@dataclass
class MetricsWindow:
    window: int
    executed: int = 0
    succeeded: int = 0
    bugs_new: int = 0
    bugs_dup: int = 0

    @property
    def validity(self) -> float:
        if self.executed == 0:
            return 0.0
        return self.succeeded / self.executed

    def tsv_row(self) -> str:
        return (
            f"{self.window}\t{self.executed}\t{self.succeeded}"
            f"\t{self.validity:.4f}\t{self.bugs_new}\t{self.bugs_dup}"
        )


@dataclass
class CampaignResult:
    windows: list[MetricsWindow]
    bugs: list[BugRecord]
    statements_executed: int
    statements_succeeded: int
    feature_states: dict[str, str]
    fatal: bool = False
    message: str = ""

    @property
    def bugs_new(self) -> int:
        return sum(1 for b in self.bugs if b.classification.kind == NEW)

    @property
    def bugs_duplicate(self) -> int:
        return len(self.bugs) - self.bugs_new


class _FatalError(Exception):
    pass


class _Lane:
    def __init__(self, lane_id: int, adapter: DbAdapter, generator, rng):
        self.lane_id = lane_id
        self.adapter = adapter
        self.generator = generator
        self.rng = rng
        self.schema: SchemaModel = generator.schema
        self.pending_setup: list[str] = []
        self.setup_statements: list[GeneratedStatement] = []
        self.checks_done = 0
        self.round_open = False


def make_adapter_factory(target: str, catalog: FeatureCatalog):
    """Factory of fresh adapters from a target spec string.

    ``mock:<spec-path>`` parses the dialect spec once and builds isolated
    in-memory engines; ``sqlite:<path>`` opens per-tag database files so
    lanes and replays never share state (``:memory:`` needs no suffix).
    """
    scheme, sep, config = target.partition(":")
    if not sep:
        raise TargetError(f"target must look like scheme:config, got {target!r}")
    if scheme == "mock":
        spec = load_mock_spec(config, catalog)
        return lambda tag: MockAdapter(spec, catalog)
    if scheme == "sqlite":
        if config in ("", ":memory:"):
            return lambda tag: open_target("sqlite::memory:", catalog)
        return lambda tag: open_target(f"sqlite:{config}.{tag}", catalog)
    return lambda tag: open_target(target, catalog)


class _Campaign:
    def __init__(self, cfg: CampaignConfig, catalog: FeatureCatalog, adapter_factory):
        self.cfg = cfg
        self.catalog = catalog
        self.adapter_factory = adapter_factory
        self.out_dir = Path(cfg.out_dir)
        self.history = HistoryStore()
        self.bugs: list[BugRecord] = []
        self.windows: list[MetricsWindow] = []
        self.current = MetricsWindow(window=0)
        self.statements_executed = 0
        self.statements_succeeded = 0
        self.next_boundary = cfg.interval

        initial = None
        if cfg.stats_path and Path(cfg.stats_path).exists():
            initial = load_stats(cfg.stats_path, catalog.ids)

        def new_store() -> StatsStore:
            store = StatsStore(catalog.features(), catalog.ddl_rule_ids)
            if initial is not None:
                store.adopt(initial)
            return store

        self.stores: list[StatsStore] = (
            [new_store() for _ in range(cfg.workers)]
            if cfg.isolate_stats
            else [new_store()]
        )
        self.lanes: list[_Lane] = []
        base = random.Random(cfg.seed)
        for i in range(cfg.workers):
            lane_rng = random.Random(base.randrange(2**63))
            store = self.stores[i] if cfg.isolate_stats else self.stores[0]
            gen = StatementGenerator(
                catalog, store, cfg.generation, SchemaModel(), lane_rng
            )
            self.lanes.append(
                _Lane(i, adapter_factory(f"lane{i}"), gen, lane_rng)
            )
        self._check_operable()

    # -- helpers ---------------------------------------------------------------

    def _check_operable(self) -> None:
        gen = self.lanes[0].generator
        if not gen.should_generate("TABLE"):
            raise TargetError("target cannot create tables; nothing to test")

    def _viable_oracles(self, lane: _Lane) -> list[str]:
        wanted = (
            ("tlp", "norec") if self.cfg.oracle == "both" else (self.cfg.oracle,)
        )
        out = []
        for kind in wanted:
            if all(
                lane.generator.should_generate(w) for w in _ORACLE_WRAPPERS[kind]
            ):
                out.append(kind)
        return out

    def _record(self, store_ix: int, statement, ok: bool) -> None:
        self.stores[store_ix if self.cfg.isolate_stats else 0].record_outcome(
            statement.features, ok
        )

    def _count_statement(self, ok: bool) -> None:
        self.statements_executed += 1
        if ok:
            self.statements_succeeded += 1

    # -- rounds -----------------------------------------------------------------

    def _start_round(self, lane: _Lane) -> None:
        lane.adapter.reset_database()
        lane.schema.reset()
        lane.setup_statements = []
        lane.checks_done = 0
        gen = lane.generator
        rng = lane.rng
        kinds: list[str] = []
        for _ in range(rng.randint(1, max(1, self.cfg.generation.max_tables))):
            kinds.append("TABLE")
            kinds.extend(["INSERT"] * rng.randint(1, 3))
        if (
            self.cfg.generation.max_views > 0
            and gen.should_generate("VIEW")
            and rng.random() < 0.5
        ):
            kinds.append("VIEW")
        if gen.should_generate("INDEX"):
            kinds.extend(["INDEX"] * rng.randint(0, 2))
        if gen.should_generate("ANALYZE") and rng.random() < 0.3:
            kinds.append("ANALYZE")
        lane.pending_setup = kinds
        lane.round_open = True

    def _depth(self) -> int:
        return current_depth(self.statements_executed, self.cfg.generation)

    def _setup_step(self, lane: _Lane) -> None:
        kind = lane.pending_setup.pop(0)
        try:
            st = lane.generator.generate_statement(kind, depth=self._depth())
        except EmptySchemaError:
            return
        status = lane.adapter.execute(st)
        if status.outcome is Outcome.FATAL:
            raise _FatalError(status.message)
        self._record(lane.lane_id, st, status.ok)
        self._count_statement(status.ok)
        lane.setup_statements.append(st)
        if status.ok:
            lane.schema.apply(st.ast, self.catalog)

    def _check_step(self, lane: _Lane) -> None:
        viable = self._viable_oracles(lane)
        if not viable:
            raise TargetError(
                "no oracle is applicable: its wrapper features are Unsupported"
            )
        kind = viable[0] if len(viable) == 1 else lane.rng.choice(viable)
        try:
            case = lane.generator.query_case(self._depth())
        except EmptySchemaError:
            lane.round_open = False
            return
        check = run_oracle(kind, case, lane.adapter, self.catalog)
        for st, status in zip(check.statements, check.statuses):
            if status.outcome is Outcome.FATAL:
                raise _FatalError(status.message)
            self._record(lane.lane_id, st, status.ok)
            self._count_statement(status.ok)
        self.current.executed += 1
        if all(s.ok for s in check.statuses):
            self.current.succeeded += 1
        if check.status == FAIL:
            self._handle_bug(lane, kind, case, check)
        lane.checks_done += 1
        if lane.checks_done >= self.cfg.checks_per_database:
            lane.round_open = False

    # -- bug handling ------------------------------------------------------------

    def _handle_bug(
        self, lane: _Lane, kind: str, case: QueryCase, check: OracleCheck
    ) -> None:
        setup = tuple(lane.setup_statements)
        catalog = self.catalog
        factory = self.adapter_factory

        def replay(subset, source, predicate) -> OracleCheck:
            adapter = factory("replay")
            try:
                adapter.reset_database()
                for st in subset:
                    adapter.execute(st)
                select = Select(None, source, predicate)
                replay_case = QueryCase(
                    select,
                    source,
                    predicate,
                    render_statement(select, catalog),
                    wrap_statement(select, catalog).features,
                )
                return run_oracle(kind, replay_case, adapter, catalog)
            finally:
                adapter.close()

        reduced = reduce_case(
            setup, case.source, case.predicate, check, replay, catalog
        )
        feature_set = reduced.check.statements[0].features
        record_id = len(self.bugs) + 1
        cls = self.history.classify(record_id, feature_set)
        record = BugRecord(
            record_id,
            kind,
            feature_set,
            reduced.setup,
            reduced.check,
            cls,
            reduced.reduced,
        )
        self.bugs.append(record)
        write_report(self.out_dir, record, original_setup=setup, original_check=check)
        if cls.kind == NEW:
            self.current.bugs_new += 1
        else:
            self.current.bugs_dup += 1

    # -- boundaries ----------------------------------------------------------------

    def _process_boundary(self) -> None:
        if self.cfg.feedback:
            for store in self.stores:
                store.reclassify(self.cfg.inference)
            for lane in self.lanes:
                lane.generator.refresh_weights()
        self.windows.append(self.current)
        self.current = MetricsWindow(window=self.current.window + 1)
        self.next_boundary += self.cfg.interval

    def _flush_window(self) -> None:
        # emit the trailing partial window only when it saw any checks
        if self.current.executed or self.current.bugs_new or self.current.bugs_dup:
            self.windows.append(self.current)

    # -- main loop --------------------------------------------------------------------

    def _should_stop(self, started: float) -> bool:
        if self.cfg.budget is not None and self.statements_executed >= self.cfg.budget:
            return True
        if (
            self.cfg.duration is not None
            and time.monotonic() - started >= self.cfg.duration
        ):
            return True
        return False

    def run(self) -> CampaignResult:
        started = time.monotonic()
        fatal = False
        message = ""
        try:
            while not self._should_stop(started):
                for lane in self.lanes:
                    if self._should_stop(started):
                        break
                    if not lane.round_open:
                        self._start_round(lane)
                    if lane.pending_setup:
                        self._setup_step(lane)
                    else:
                        self._check_step(lane)
                    while self.statements_executed >= self.next_boundary:
                        self._process_boundary()
        except _FatalError as exc:
            fatal = True
            message = str(exc)
        except TargetError as exc:
            fatal = True
            message = str(exc)
        finally:
            for lane in self.lanes:
                lane.adapter.close()
        if self.cfg.feedback:
            for store in self.stores:
                store.reclassify(self.cfg.inference)
        self._flush_window()
        self._persist()
        states = {
            ident: state.value for ident, state in sorted(self.stores[0].states().items())
        }
        return CampaignResult(
            self.windows,
            self.bugs,
            self.statements_executed,
            self.statements_succeeded,
            states,
            fatal,
            message,
        )

    def _persist(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        lines = [METRICS_HEADER]
        lines.extend(w.tsv_row() for w in self.windows)
        (self.out_dir / "metrics.tsv").write_text("\n".join(lines) + "\n")
        if self.cfg.stats_path:
            persist_stats(self._merged_store(), self.cfg.stats_path)
        from . import plots

        plots.render_campaign_figures(
            self.windows, self.stores[0], self.out_dir / "figures"
        )

    def _merged_store(self) -> StatsStore:
        if len(self.stores) == 1:
            return self.stores[0]
        merged = StatsStore(self.catalog.features(), self.catalog.ddl_rule_ids)
        totals: dict[str, tuple[int, int]] = {}
        states: dict[str, object] = {}
        for store in self.stores:
            for stats in store.all_stats():
                n, y = totals.get(stats.feature.identifier, (0, 0))
                totals[stats.feature.identifier] = (
                    n + stats.executions,
                    y + stats.successes,
                )
                prev = states.get(stats.feature.identifier)
                states[stats.feature.identifier] = _sticky(prev, stats.state)
        merged.adopt(
            (self.catalog.feature(ident), n, y, states[ident])
            for ident, (n, y) in totals.items()
        )
        return merged


def _sticky(previous, state):
    from .features import FeatureState

    if previous is FeatureState.UNSUPPORTED or state is FeatureState.UNSUPPORTED:
        return FeatureState.UNSUPPORTED
    if previous is None:
        return state
    if previous is FeatureState.SUPPORTED or state is FeatureState.SUPPORTED:
        return FeatureState.SUPPORTED
    return state


def run_campaign(
    cfg: CampaignConfig, catalog: FeatureCatalog, adapter_factory
) -> CampaignResult:
    return _Campaign(cfg, catalog, adapter_factory).run()


# --------------------------------------------------------------------------
# replaying saved reproductions


@dataclass(frozen=True)
class RecheckEntry:
    bug: str
    original_status: str
    replay_status: str
    detail: str = ""


def recheck(out_dir, adapter_factory) -> list[RecheckEntry]:
    """Replay every saved bug reproduction on a fresh database and
    recompute its verdict."""
    from .oracles import recompute_verdict
    from .prioritizer import list_bug_dirs, read_reproduction

    entries: list[RecheckEntry] = []
    for bug_dir in list_bug_dirs(out_dir):
        name = bug_dir.name
        try:
            saved = read_reproduction(bug_dir)
        except OSError as exc:
            entries.append(RecheckEntry(name, "?", "Skip", f"unreadable: {exc}"))
            continue
        original = "?"
        oracle_file = bug_dir / "oracle.txt"
        if oracle_file.exists():
            for line in oracle_file.read_text().splitlines():
                if line.startswith("status:"):
                    original = line.split(":", 1)[1].strip()
                    break
        adapter = adapter_factory("recheck")
        try:
            adapter.reset_database()
            for stmt in saved.setup:
                adapter.execute(stmt)
            rows = []
            for stmt in saved.checks:
                result = adapter.query(stmt)
                rows.append(tuple(result.rows) if result.status.ok else None)
            status, detail = recompute_verdict(saved.oracle, rows)
        except ValueError as exc:
            status, detail = "Skip", str(exc)
        finally:
            adapter.close()
        entries.append(RecheckEntry(name, original, status, detail))
    return entries
