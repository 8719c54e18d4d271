import pytest

from adaquery.catalog import default_catalog
from adaquery.generator import QueryCase
from adaquery.mocksql import BugInjection, MockAdapter, MockDialectSpec
from adaquery.oracles import (
    FAIL,
    NOREC_TAGS,
    PASS,
    SKIP,
    TLP_TAGS,
    norec_check,
    normalize_row,
    recompute_verdict,
    row_multiset,
    run_oracle,
    tlp_check,
    wrap_statement,
)
from adaquery.sqlast import (
    Binary,
    ColumnRef,
    Constant,
    DType,
    Select,
    TableRef,
)

C0 = ColumnRef("t0", "c0", DType.INTEGER)


def make_case(predicate, catalog, source=None):
    source = source if source is not None else TableRef("t0")
    select = Select(None, source, predicate)
    stmt = wrap_statement(select, catalog)
    return QueryCase(select, source, predicate, stmt.sql, stmt.features)


def adapter_with(catalog, bugs=(), drop=frozenset()):
    supported = frozenset({e.identifier for e in catalog} - set(drop))
    adapter = MockAdapter(MockDialectSpec(supported, bugs=tuple(bugs)), catalog)
    for text in (
        "CREATE TABLE t0 (c0 INTEGER, c1 TEXT)",
        "INSERT INTO t0 (c0, c1) VALUES (1, 'a'), (2, 'b'), (NULL, 'c'), (1, 'a')",
    ):
        assert adapter.execute(text).ok
    return adapter


def test_tlp_passes_on_clean_target(catalog):
    adapter = adapter_with(catalog)
    check = tlp_check(make_case(Binary(">", C0, Constant(1, DType.INTEGER)), catalog),
                      adapter, catalog)
    assert check.status == PASS
    assert check.tags == TLP_TAGS
    assert len(check.statements) == 4
    # the partitions really split: kept 1, negated 2 (dup), null row 1
    assert [len(r) for r in check.rows] == [1, 4, 2, 1]


def test_tlp_fails_when_null_rows_leak(catalog):
    bug = BugInjection(frozenset({">"}), "filter_null_true")
    check = tlp_check(make_case(Binary(">", C0, Constant(1, DType.INTEGER)), catalog),
                      adapter_with(catalog, bugs=[bug]), adapter_with(catalog).catalog)
    assert check.status == FAIL
    assert "partition union" in check.detail


def test_tlp_skips_on_statement_error(catalog):
    # the negated partition introduces NOT, which this dialect lacks
    adapter = adapter_with(catalog, drop={"NOT"})
    check = tlp_check(make_case(Binary(">", C0, Constant(1, DType.INTEGER)), catalog),
                      adapter, catalog)
    assert check.status == SKIP
    assert "unsupported feature: NOT" in check.detail
    assert check.rows[2] is None


def test_norec_passes_on_clean_target(catalog):
    adapter = adapter_with(catalog)
    check = norec_check(make_case(Binary("<=", C0, Constant(1, DType.INTEGER)), catalog),
                        adapter, catalog)
    assert check.status == PASS
    assert check.tags == NOREC_TAGS
    assert len(check.statements) == 2


def test_norec_fails_on_filter_only_bug(catalog):
    bug = BugInjection(frozenset({"<=", "WHERE"}), "filter_le_as_lt")
    adapter = adapter_with(catalog, bugs=[bug])
    check = norec_check(make_case(Binary("<=", C0, Constant(1, DType.INTEGER)), catalog),
                        adapter, catalog)
    assert check.status == FAIL
    assert "optimized query kept" in check.detail


def test_case_features_flow_into_check(catalog):
    case = make_case(Binary(">", C0, Constant(1, DType.INTEGER)), catalog)
    check = tlp_check(case, adapter_with(catalog), catalog)
    assert check.case_features == case.features


def test_run_oracle_dispatch_and_unknown_kind(catalog):
    case = make_case(Binary(">", C0, Constant(1, DType.INTEGER)), catalog)
    adapter = adapter_with(catalog)
    assert run_oracle("tlp", case, adapter, catalog).oracle == "tlp"
    assert run_oracle("norec", case, adapter, catalog).oracle == "norec"
    with pytest.raises(ValueError):
        run_oracle("pqs", case, adapter, catalog)


def test_normalize_row_folds_bool_to_int():
    assert normalize_row((True, False, None, "x")) == (1, 0, None, "x")
    assert row_multiset([(True,), (1,)]) == row_multiset([(1,), (1,)])


def test_multiset_comparison_counts_duplicates(catalog):
    adapter = adapter_with(catalog)
    # (1, 'a') appears twice; set semantics would hide a dropped duplicate
    check = tlp_check(make_case(Binary("=", C0, Constant(1, DType.INTEGER)), catalog),
                      adapter, catalog)
    assert check.status == PASS
    assert len(check.rows[0]) == 2


def test_recompute_verdict_roundtrips_saved_rows(catalog):
    bug = BugInjection(frozenset({">"}), "filter_null_true")
    check = tlp_check(make_case(Binary(">", C0, Constant(1, DType.INTEGER)), catalog),
                      adapter_with(catalog, bugs=[bug]), catalog)
    status, detail = recompute_verdict("tlp", list(check.rows))
    assert (status, detail) == (check.status, check.detail)


def test_recompute_verdict_skips_on_missing_rows():
    status, detail = recompute_verdict("norec", [None, ()])
    assert status == SKIP
    assert "failed during replay" in detail


def test_recompute_verdict_unknown_oracle():
    with pytest.raises(ValueError):
        recompute_verdict("rowcount", [(), ()])
