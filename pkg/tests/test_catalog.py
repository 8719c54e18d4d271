import pytest

from adaquery.catalog import (
    FeatureCatalog,
    Signature,
    composite_identifier,
    default_catalog,
    parse_catalog,
)
from adaquery.errors import CatalogError
from adaquery.features import FeatureCategory


def test_default_catalog_loads_once():
    assert default_catalog() is default_catalog()
    assert len(default_catalog()) == 172


def test_ddl_rule_ids(catalog):
    assert catalog.ddl_rule_ids == frozenset(
        {"ANALYZE", "INDEX", "INSERT", "TABLE", "UNIQUE", "VIEW"}
    )


def test_lookup_and_identity(catalog):
    entry = catalog.get("NULLIF")
    assert entry.category is FeatureCategory.FUNCTION
    assert entry.arity == 2
    assert entry.signature == Signature(args=("SAME", "SAME"), result="SAME")
    assert entry.template == "NULLIF({0}, {1})"
    assert catalog.feature("NULLIF") is entry.feature
    assert "NULLIF" in catalog
    assert catalog.maybe("NOPE") is None
    with pytest.raises(CatalogError):
        catalog.get("NOPE")


def test_template_arity_from_placeholders(catalog):
    assert catalog.get("BETWEEN").arity == 3
    assert catalog.get("NEG").arity == 1
    assert catalog.get("ANALYZE").arity == 0


@pytest.mark.parametrize(
    "func,idx,dtype,expected",
    [
        ("SUBSTR", 1, "TEXT", "SUBSTR1STRING"),
        ("SUBSTR", 2, "INTEGER", "SUBSTR2INT"),
        ("HEX", 1, "BOOLEAN", "HEX1BOOL"),
    ],
)
def test_composite_identifier(func, idx, dtype, expected):
    assert composite_identifier(func, idx, dtype) == expected


def test_composites_registered_for_functions(catalog):
    entry = catalog.get("SUBSTR1STRING")
    assert entry.category is FeatureCategory.COMPOSITE_ARG_TYPE
    assert catalog.get("IMPLICIT_CAST").category is FeatureCategory.ABSTRACT_PROPERTY


def test_expression_entries_are_operators_and_functions(catalog):
    cats = {e.category for e in catalog.expression_entries()}
    assert cats == {FeatureCategory.OPERATOR, FeatureCategory.FUNCTION}


def test_by_category_partitions(catalog):
    total = sum(len(catalog.by_category(c)) for c in FeatureCategory)
    assert total == len(catalog)


def test_subset_preserves_entries(catalog):
    sub = catalog.subset(["SELECT", "WHERE", "AND"])
    assert isinstance(sub, FeatureCatalog)
    assert len(sub) == 3
    assert sub.get("AND") is catalog.get("AND")
    assert "NULLIF" not in sub


def test_ids_mapping_is_complete(catalog):
    assert set(catalog.ids) == {e.identifier for e in catalog}
    assert all(catalog.ids[k].identifier == k for k in catalog.ids)


def test_parse_catalog_rejects_malformed_line():
    with pytest.raises(CatalogError):
        parse_catalog("bad line with no tabs\n")


def test_parse_catalog_rejects_duplicate_identifier():
    text = "Operator\t(${0} + {1})\nOperator\t({0} + {1})\n".replace("$", "")
    with pytest.raises(CatalogError):
        parse_catalog(text)
