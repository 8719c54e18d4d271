import random

import pytest

from adaquery.catalog import default_catalog
from adaquery.mocksql import BugInjection, MockAdapter, MockDialectSpec
from adaquery.oracles import tlp_check, wrap_statement
from adaquery.prioritizer import (
    NEW,
    POTENTIAL_DUPLICATE,
    BugRecord,
    Classification,
    HistoryStore,
    brute_force_classify,
    bug_dir_name,
    classify,
    list_bug_dirs,
    read_reproduction,
    write_report,
)


def test_first_record_is_new():
    history = HistoryStore()
    assert classify(1, {"NULLIF", "!="}, history).kind == NEW
    assert len(history) == 1


def test_superset_is_duplicate_and_not_stored():
    history = HistoryStore()
    classify(1, {"NULLIF", "!="}, history)
    result = classify(2, {"NULLIF", "!=", "INTEGER"}, history)
    assert result == Classification(POTENTIAL_DUPLICATE, 1)
    assert len(history) == 1


def test_overlapping_but_not_superset_is_new():
    history = HistoryStore()
    classify(1, {"NULLIF", "!="}, history)
    assert classify(2, {"NULLIF", "<>"}, history).kind == NEW
    assert len(history) == 2


def test_identical_set_is_duplicate():
    history = HistoryStore()
    classify(1, {"A"}, history)
    assert classify(2, {"A"}, history) == Classification(POTENTIAL_DUPLICATE, 1)


def test_strict_subset_is_new():
    history = HistoryStore()
    classify(1, {"A", "B"}, history)
    assert classify(2, {"B"}, history).kind == NEW
    # and the smaller set now shadows the larger one's supersets
    assert classify(3, {"A", "B", "C"}, history).duplicate_of == 1
    assert classify(4, {"B", "C"}, history).duplicate_of == 2


def test_tie_breaks_to_lowest_id():
    history = HistoryStore()
    classify(5, {"A"}, history)
    classify(2, {"B"}, history)
    result = classify(9, {"A", "B"}, history)
    assert result == Classification(POTENTIAL_DUPLICATE, 2)


def test_empty_feature_set_rejected():
    with pytest.raises(ValueError):
        classify(1, set(), HistoryStore())


def test_matches_brute_force_on_random_histories():
    rng = random.Random(42)
    alphabet = [f"F{i}" for i in range(12)]
    for _ in range(300):
        fast, slow = HistoryStore(), HistoryStore()
        for rid in range(30):
            size = rng.randint(1, 5)
            feature_set = set(rng.sample(alphabet, size))
            a = classify(rid, feature_set, fast)
            b = brute_force_classify(rid, set(feature_set), slow)
            assert a == b
        assert fast.sets == slow.sets


def test_accepts_feature_ids(catalog):
    history = HistoryStore()
    fids = {catalog.feature("NULLIF"), catalog.feature("!=")}
    classify(1, fids, history)
    assert classify(2, {"NULLIF", "!=", "WHERE"}, history).duplicate_of == 1


@pytest.mark.parametrize("rid,name", [(0, "bug-0000"), (7, "bug-0007"), (1234, "bug-1234")])
def test_bug_dir_name(rid, name):
    assert bug_dir_name(rid) == name


def make_failing_record(catalog):
    from adaquery.generator import QueryCase
    from adaquery.sqlast import Binary, ColumnRef, Constant, DType, Select, TableRef

    supported = frozenset(e.identifier for e in catalog)
    bug = BugInjection(frozenset({">"}), "filter_null_true")
    adapter = MockAdapter(MockDialectSpec(supported, bugs=(bug,)), catalog)
    setup_sql = (
        "CREATE TABLE t0 (c0 INTEGER)",
        "INSERT INTO t0 (c0) VALUES (1), (NULL)",
    )
    setup = []
    for text in setup_sql:
        from adaquery.mocksql import parse_statement

        ast = parse_statement(text, adapter._resolve_column, catalog)
        stmt = wrap_statement(ast, catalog)
        assert adapter.execute(stmt).ok
        setup.append(stmt)
    predicate = Binary(">", ColumnRef("t0", "c0", DType.INTEGER), Constant(0, DType.INTEGER))
    select = Select(None, TableRef("t0"), predicate)
    stmt = wrap_statement(select, catalog)
    case = QueryCase(select, select.source, predicate, stmt.sql, stmt.features)
    check = tlp_check(case, adapter, catalog)
    assert check.status == "Fail"
    record = BugRecord(
        id=3,
        oracle="tlp",
        feature_set=check.case_features,
        setup=tuple(setup),
        check=check,
        classification=Classification(NEW),
    )
    return record, adapter


def test_write_report_and_read_back(tmp_path, catalog):
    record, _ = make_failing_record(catalog)
    path = write_report(tmp_path, record)
    assert path == tmp_path / "bugs" / "bug-0003"
    for name in ("reproduce.sql", "oracle.txt", "features.txt", "classification.txt"):
        assert (path / name).is_file()

    saved = read_reproduction(path)
    assert saved.oracle == "tlp"
    assert saved.setup == tuple(st.sql for st in record.setup)
    assert saved.checks == tuple(st.sql for st in record.check.statements)
    assert saved.tags == ("case", "base", "negated", "isnull")

    features = (path / "features.txt").read_text().split()
    assert features == sorted(features)
    assert "classification: New" in (path / "classification.txt").read_text()


def test_replayed_reproduction_still_fails(tmp_path, catalog):
    from adaquery.oracles import recompute_verdict

    record, adapter = make_failing_record(catalog)
    path = write_report(tmp_path, record)
    saved = read_reproduction(path)
    adapter.reset_database()
    for text in saved.setup:
        assert adapter.execute(text).ok
    rows = []
    for text in saved.checks:
        res = adapter.query(text)
        rows.append(tuple(res.rows) if res.ok else None)
    status, _ = recompute_verdict(saved.oracle, rows)
    assert status == "Fail"


def test_original_reproduction_kept_alongside(tmp_path, catalog):
    record, _ = make_failing_record(catalog)
    path = write_report(tmp_path, record, original_setup=record.setup,
                        original_check=record.check)
    assert (path / "reproduce.orig.sql").is_file()


def test_list_bug_dirs_sorted(tmp_path, catalog):
    assert list_bug_dirs(tmp_path) == []
    record, _ = make_failing_record(catalog)
    for rid in (4, 2, 11):
        write_report(tmp_path, BugRecord(rid, record.oracle, record.feature_set,
                                         record.setup, record.check,
                                         record.classification))
    names = [p.name for p in list_bug_dirs(tmp_path)]
    assert names == ["bug-0002", "bug-0004", "bug-0011"]
