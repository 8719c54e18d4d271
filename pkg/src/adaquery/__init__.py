"""adaquery: feedback-guided metamorphic testing for SQL engines.

The package learns which SQL features a target engine supports from
execution feedback (a Beta-binomial posterior per feature), steers a
weighted random statement generator away from unsupported features, and
checks query results with two metamorphic oracles (ternary predicate
partitioning and optimization-consistency row counting). Failing cases
are automatically reduced, deduplicated by feature-set containment, and
written as reproducible report directories.
"""

from .adapters import (
    DbAdapter,
    ExecutionStatus,
    Outcome,
    QueryResult,
    SQLiteAdapter,
    open_target,
    register_adapter,
)
from .campaign import (
    CampaignConfig,
    CampaignResult,
    MetricsWindow,
    make_adapter_factory,
    recheck,
    run_campaign,
)
from .catalog import (
    CatalogEntry,
    FeatureCatalog,
    composite_identifier,
    default_catalog,
    load_catalog,
    parse_catalog,
)
from .errors import (
    AdaqueryError,
    CatalogError,
    EmptySchemaError,
    GenerationError,
    MockSpecError,
    RuleExhaustedError,
    StatsParseError,
    TargetError,
)
from .features import (
    ChoiceContext,
    FeatureCategory,
    FeatureId,
    FeatureState,
    FeatureStats,
    InferenceConfig,
    StatsStore,
    choose_alternative,
    classify_ddl_feature,
    classify_query_feature,
    load_stats,
    persist_stats,
    prob_below_threshold,
    redistribute,
)
from .generator import (
    GenConfig,
    GeneratedStatement,
    QueryCase,
    StatementGenerator,
    TypingMode,
    current_depth,
)
from .mocksql import (
    BugInjection,
    MockAdapter,
    MockDialectSpec,
    format_mock_spec,
    load_mock_spec,
    mock_reference_eval,
    parse_mock_spec,
)
from .oracles import OracleCheck, norec_check, run_oracle, tlp_check
from .prioritizer import (
    BugRecord,
    Classification,
    HistoryStore,
    brute_force_classify,
    classify,
    write_report,
)
from .reducer import ReducedCase, reduce_case
from .schema import SchemaModel

__version__ = "0.1.0"

__all__ = [
    "AdaqueryError",
    "BugInjection",
    "BugRecord",
    "CampaignConfig",
    "CampaignResult",
    "CatalogEntry",
    "CatalogError",
    "ChoiceContext",
    "Classification",
    "DbAdapter",
    "EmptySchemaError",
    "ExecutionStatus",
    "FeatureCatalog",
    "FeatureCategory",
    "FeatureId",
    "FeatureState",
    "FeatureStats",
    "GenConfig",
    "GeneratedStatement",
    "GenerationError",
    "HistoryStore",
    "InferenceConfig",
    "MetricsWindow",
    "MockAdapter",
    "MockDialectSpec",
    "MockSpecError",
    "OracleCheck",
    "Outcome",
    "QueryCase",
    "QueryResult",
    "ReducedCase",
    "RuleExhaustedError",
    "SQLiteAdapter",
    "SchemaModel",
    "StatementGenerator",
    "StatsParseError",
    "StatsStore",
    "TargetError",
    "TypingMode",
    "brute_force_classify",
    "choose_alternative",
    "classify",
    "classify_ddl_feature",
    "classify_query_feature",
    "composite_identifier",
    "current_depth",
    "default_catalog",
    "format_mock_spec",
    "load_catalog",
    "load_mock_spec",
    "load_stats",
    "make_adapter_factory",
    "mock_reference_eval",
    "norec_check",
    "open_target",
    "parse_catalog",
    "parse_mock_spec",
    "persist_stats",
    "prob_below_threshold",
    "recheck",
    "reduce_case",
    "redistribute",
    "register_adapter",
    "run_campaign",
    "run_oracle",
    "tlp_check",
    "write_report",
]
