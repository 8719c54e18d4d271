import pytest

from adaquery.errors import EmptySchemaError, GenerationError
from adaquery.features import FeatureState
from adaquery.generator import (
    GenConfig,
    TypingMode,
    current_depth,
    feature_walk_matches,
)
from adaquery.sqlast import statement_type_violations

from tests.conftest import populate

ALL_KINDS = ("TABLE", "INDEX", "VIEW", "INSERT", "ANALYZE", "SELECT")


@pytest.mark.parametrize(
    "executed,expected",
    [(0, 1), (99, 1), (100, 2), (199, 2), (200, 3), (10_000, 3)],
)
def test_current_depth_boundaries(executed, expected):
    cfg = GenConfig(max_depth=3, depth_schedule_interval=100)
    assert current_depth(executed, cfg) == expected


@pytest.mark.parametrize("kwargs", [{"max_depth": 0}, {"depth_schedule_interval": 0}])
def test_config_rejects_nonpositive(kwargs):
    with pytest.raises(ValueError):
        GenConfig(**kwargs)


def test_unknown_kind_rejected(make_stack):
    gen, _, _ = make_stack()
    with pytest.raises(GenerationError):
        gen.generate_statement("DROP")


def test_query_on_empty_schema_raises(make_stack):
    gen, _, _ = make_stack()
    with pytest.raises(EmptySchemaError):
        gen.query_case(depth=1)


def test_recorded_features_match_ast_walk(catalog, make_stack):
    for seed in range(4):
        gen, schema, adapter = make_stack(seed=seed)
        populate(gen, schema, adapter)
        for _ in range(30):
            for kind in ALL_KINDS:
                stmt = gen.generate_statement(kind, depth=2)
                assert feature_walk_matches(stmt, catalog), stmt.sql


def test_static_mode_emits_only_well_typed(catalog, make_stack):
    gen, schema, adapter = make_stack(seed=3, typing_mode=TypingMode.STATIC)
    populate(gen, schema, adapter)
    for _ in range(200):
        case = gen.query_case(depth=3)
        assert not statement_type_violations(case.select, catalog), case.sql
        assert "IMPLICIT_CAST" not in {f.identifier for f in case.features}


def test_dynamic_mode_eventually_miscasts(make_stack):
    gen, schema, adapter = make_stack(seed=3, typing_mode=TypingMode.DYNAMIC)
    populate(gen, schema, adapter)
    seen = set()
    for _ in range(300):
        seen |= {f.identifier for f in gen.query_case(depth=3).features}
    assert "IMPLICIT_CAST" in seen


def test_unsupported_features_never_emitted(make_stack):
    dead = {"NULLIF", "FULL_JOIN", "<=", "VIEW"}
    gen, schema, adapter = make_stack(seed=5, typing_mode=TypingMode.DYNAMIC)
    populate(gen, schema, adapter)
    for ident in dead:
        gen.store.get(ident).state = FeatureState.UNSUPPORTED
    gen.refresh_weights()
    for ident in dead:
        assert not gen.should_generate(ident)
    emitted = set()
    for i in range(400):
        kind = ALL_KINDS[i % len(ALL_KINDS)]
        if kind == "VIEW":
            continue
        stmt = gen.generate_statement(kind, depth=3)
        emitted |= {f.identifier for f in stmt.features}
    assert not emitted & dead


def test_learn_mode_degrades_to_static(make_stack):
    gen, schema, adapter = make_stack(seed=0, typing_mode=TypingMode.LEARN)
    assert gen.effective_mode() is TypingMode.DYNAMIC
    gen.store.get("IMPLICIT_CAST").state = FeatureState.UNSUPPORTED
    gen.refresh_weights()
    assert gen.effective_mode() is TypingMode.STATIC


def test_same_seed_same_statements(make_stack):
    def run(seed):
        gen, schema, adapter = make_stack(seed=seed)
        populate(gen, schema, adapter)
        out = []
        for i in range(60):
            out.append(gen.generate_statement(ALL_KINDS[i % len(ALL_KINDS)], depth=2).sql)
        return out

    assert run(7) == run(7)
    assert run(7) != run(8)


def test_select_kind_routes_through_query_case(make_stack):
    gen, schema, adapter = make_stack(seed=1)
    populate(gen, schema, adapter)
    stmt = gen.generate_statement("SELECT", depth=2)
    assert stmt.kind == "Select"
    assert stmt.sql.startswith("SELECT")
    assert "SELECT" in {f.identifier for f in stmt.features}


def test_query_case_shape(make_stack):
    gen, schema, adapter = make_stack(seed=2)
    populate(gen, schema, adapter)
    case = gen.query_case(depth=2)
    assert case.select.where is case.predicate
    assert case.select.source is case.source
    assert case.sql.startswith("SELECT * FROM")
