import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaquery.errors import CatalogError, RuleExhaustedError, StatsParseError
from adaquery.features import (
    STATS_HEADER,
    ChoiceContext,
    FeatureCategory,
    FeatureId,
    FeatureState,
    FeatureStats,
    InferenceConfig,
    StatsStore,
    _binomial_tail_row,
    _binomial_tail_scalar,
    choose_alternative,
    classify_ddl_feature,
    classify_query_feature,
    load_stats,
    persist_stats,
    posterior_params,
    prob_below_threshold,
    redistribute,
)

OP = FeatureCategory.OPERATOR
FID = FeatureId("DUMMY", OP)


def stats(executions, successes):
    return FeatureStats(FID, executions, successes)


# Reference values computed with exact rational arithmetic of the binomial
# tail sum_{j=y+1}^{N+1} C(N+1, j) p^j (1-p)^(N+1-j).
FROZEN = [
    (400, 0, 0.01, 0.9822289522577052),
    (100, 0, 0.01, 0.6376279821395028),
    (100, 50, 0.01, 1.2206803070165433e-73),
    (0, 0, 0.01, 0.01),
    (20, 0, 0.01, 0.19027213177874144),
    (298, 0, 0.01, 0.9504637433623375),
    (299, 0, 0.01, 0.9509591059287141),
    (10, 2, 0.5, 0.96728515625),
    (47, 13, 0.3, 0.6038549827880523),
    (1000, 5, 0.01, 0.9342350195088305),
    (1000, 500, 0.5, 0.5),
    (7, 7, 0.25, 1.52587890625e-05),
]


@pytest.mark.parametrize("executions,successes,p,expected", FROZEN)
def test_prob_below_threshold_reference_values(executions, successes, p, expected):
    got = prob_below_threshold(stats(executions, successes), p)
    assert got == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("executions,successes,p,expected", FROZEN[:4])
def test_prob_below_threshold_against_mpmath(executions, successes, p, expected):
    mpmath = pytest.importorskip("mpmath")
    a, b = successes + 1, executions - successes + 1
    want = float(mpmath.betainc(a, b, 0, p, regularized=True))
    got = prob_below_threshold(stats(executions, successes), p)
    assert got == pytest.approx(want, abs=1e-12)


def test_posterior_params_uniform_prior():
    assert posterior_params(stats(0, 0)) == (1, 1)
    assert posterior_params(stats(400, 0)) == (1, 401)
    assert posterior_params(stats(10, 3)) == (4, 8)


def test_prob_below_threshold_rejects_degenerate_threshold():
    with pytest.raises(ValueError):
        prob_below_threshold(stats(5, 5), 0.0)
    with pytest.raises(ValueError):
        prob_below_threshold(stats(5, 5), 1.0)


def test_scalar_path_matches_row_path():
    # campaigns overflow the cached-row regime; both routes must agree
    trials = 3000
    row = _binomial_tail_row(trials, 0.01)
    for lo in (0, 1, 5, 28, 29, 30, 31, 60, 400, 3000):
        scalar = _binomial_tail_scalar(trials, lo, 0.01)
        assert scalar == pytest.approx(float(row[lo]), abs=1e-10)


@given(st.integers(min_value=0, max_value=400), st.data())
@settings(max_examples=60, deadline=None)
def test_prob_below_threshold_monotone_in_successes(executions, data):
    successes = data.draw(st.integers(min_value=0, max_value=executions))
    p_lo = prob_below_threshold(stats(executions, successes), 0.01)
    if successes < executions:
        p_hi = prob_below_threshold(stats(executions, successes + 1), 0.01)
        assert p_hi <= p_lo + 1e-12


def test_query_feature_classification_boundary():
    cfg = InferenceConfig(threshold_p=0.01, confidence=0.95)
    assert classify_query_feature(stats(0, 0), cfg) is FeatureState.UNKNOWN
    assert classify_query_feature(stats(297, 0), cfg) is FeatureState.SUPPORTED
    assert classify_query_feature(stats(298, 0), cfg) is FeatureState.UNSUPPORTED
    assert classify_query_feature(stats(400, 0), cfg) is FeatureState.UNSUPPORTED
    assert classify_query_feature(stats(400, 380), cfg) is FeatureState.SUPPORTED


def test_ddl_feature_classification_boundary():
    cfg = InferenceConfig(ddl_fail_limit=20)
    assert classify_ddl_feature(stats(0, 0), cfg) is FeatureState.UNKNOWN
    assert classify_ddl_feature(stats(19, 0), cfg) is FeatureState.UNKNOWN
    assert classify_ddl_feature(stats(20, 0), cfg) is FeatureState.UNSUPPORTED
    assert classify_ddl_feature(stats(500, 1), cfg) is FeatureState.SUPPORTED
    assert classify_ddl_feature(stats(1, 1), cfg) is FeatureState.SUPPORTED


@pytest.mark.parametrize(
    "kwargs",
    [
        {"threshold_p": 0.0},
        {"threshold_p": 1.0},
        {"confidence": 1.5},
        {"ddl_fail_limit": 0},
        {"update_interval": 0},
    ],
)
def test_inference_config_validation(kwargs):
    with pytest.raises(ValueError):
        InferenceConfig(**kwargs)


def test_feature_id_rejects_bad_identifier():
    with pytest.raises(CatalogError):
        FeatureId("has space", OP)


# -- store -----------------------------------------------------------------


def test_record_outcome_touches_only_listed_features(catalog, store):
    select = catalog.feature("SELECT")
    where = catalog.feature("WHERE")
    store.record_outcome([select, where], success=True)
    store.record_outcome([select], success=False)
    assert store.get("SELECT").executions == 2
    assert store.get("SELECT").successes == 1
    assert store.get("WHERE").executions == 1
    assert store.get("AND").executions == 0


def test_record_outcome_unknown_feature_raises(store):
    with pytest.raises(CatalogError):
        store.record_outcome([FID], success=True)


def test_reclassify_reports_newly_unsupported(catalog, store):
    cfg = InferenceConfig()
    neg = catalog.feature("NEG")
    for _ in range(350):
        store.record_outcome([neg], success=False)
    newly = store.reclassify(cfg)
    assert newly == ["NEG"]
    # second pass must not report it again
    assert store.reclassify(cfg) == []
    assert store.state("NEG") is FeatureState.UNSUPPORTED


def test_unsupported_is_sticky(catalog, store):
    cfg = InferenceConfig()
    neg = catalog.feature("NEG")
    for _ in range(350):
        store.record_outcome([neg], success=False)
    store.reclassify(cfg)
    for _ in range(1000):
        store.record_outcome([neg], success=True)
    store.reclassify(cfg)
    assert store.state("NEG") is FeatureState.UNSUPPORTED


def test_ddl_rule_uses_attempt_count(catalog, store):
    cfg = InferenceConfig()
    index = catalog.feature("INDEX")
    for _ in range(20):
        store.record_outcome([index], success=False)
    assert "INDEX" in store.reclassify(cfg)


def test_stats_roundtrip(tmp_path, catalog, store):
    cfg = InferenceConfig()
    neg = catalog.feature("NEG")
    select = catalog.feature("SELECT")
    for _ in range(299):
        store.record_outcome([neg, select], success=False)
    store.record_outcome([select], success=True)
    store.reclassify(cfg)
    path = tmp_path / "stats.tsv"
    persist_stats(store, path)

    lines = path.read_text().splitlines()
    assert lines[0] == STATS_HEADER
    body = [l.split("\t")[0] for l in lines[1:]]
    assert body == sorted(body)

    rows = load_stats(path, catalog.ids)
    other = StatsStore(catalog.features(), catalog.ddl_rule_ids)
    other.adopt(rows)
    assert other.get("NEG").executions == 299
    assert other.state("NEG") is FeatureState.UNSUPPORTED
    assert other.get("SELECT").successes == 1


def test_load_stats_rejects_bad_header(tmp_path, catalog):
    path = tmp_path / "stats.tsv"
    path.write_text("not-a-stats-file\n")
    with pytest.raises(StatsParseError):
        load_stats(path, catalog.ids)


# -- weighted choice --------------------------------------------------------


def make_rule(n):
    return ChoiceContext.uniform("rule", [FeatureId(f"F{i}", OP) for i in range(n)])


def test_uniform_weights():
    ctx = make_rule(4)
    assert ctx.weights == (0.25, 0.25, 0.25, 0.25)


def test_choice_context_validation():
    with pytest.raises(ValueError):
        ChoiceContext("empty", ())
    alts = tuple(FeatureId(f"F{i}", OP) for i in range(2))
    with pytest.raises(ValueError):
        ChoiceContext("arity", alts, weights=(1.0,))
    with pytest.raises(ValueError):
        ChoiceContext("sum", alts, weights=(0.6, 0.6))


@given(
    n=st.integers(min_value=1, max_value=12),
    dead_seed=st.integers(min_value=0, max_value=2**31),
)
@settings(max_examples=120, deadline=None)
def test_redistribute_properties(n, dead_seed):
    ctx = make_rule(n)
    rng = random.Random(dead_seed)
    dead = {f"F{i}" for i in range(n) if rng.random() < 0.4}
    states = {
        f"F{i}": FeatureState.UNSUPPORTED if f"F{i}" in dead else FeatureState.SUPPORTED
        for i in range(n)
    }
    if len(dead) == n:
        with pytest.raises(RuleExhaustedError):
            redistribute(ctx, states)
        return
    out = redistribute(ctx, states)
    assert math.isclose(sum(out.weights), 1.0, abs_tol=1e-12)
    live = [w for fid, w in zip(out.alternatives, out.weights) if fid.identifier not in dead]
    for fid, w in zip(out.alternatives, out.weights):
        assert (w == 0.0) == (fid.identifier in dead)
    assert all(math.isclose(w, live[0], abs_tol=1e-12) for w in live)


def test_choose_alternative_skips_zero_weight():
    ctx = make_rule(5)
    states = {"F1": FeatureState.UNSUPPORTED, "F3": FeatureState.UNSUPPORTED}
    out = redistribute(ctx, states)
    rng = random.Random(7)
    picked = {choose_alternative(out, rng).identifier for _ in range(500)}
    assert picked == {"F0", "F2", "F4"}


def test_choose_alternative_rounding_edge():
    ctx = make_rule(3)

    class NearOne:
        def random(self):
            return 0.999999999999999

    assert choose_alternative(ctx, NearOne()).identifier == "F2"
