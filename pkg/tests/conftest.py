import random

import pytest

from adaquery.catalog import default_catalog
from adaquery.features import InferenceConfig, StatsStore
from adaquery.generator import GenConfig, StatementGenerator, TypingMode
from adaquery.mocksql import MockAdapter, MockDialectSpec
from adaquery.schema import SchemaModel


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture
def clean_spec(catalog):
    return MockDialectSpec(
        supported=frozenset(e.identifier for e in catalog), typing="dynamic"
    )


@pytest.fixture
def clean_adapter(catalog, clean_spec):
    return MockAdapter(clean_spec, catalog)


@pytest.fixture
def store(catalog):
    return StatsStore(catalog.features(), catalog.ddl_rule_ids)


@pytest.fixture
def make_stack(catalog, clean_spec):
    """Factory for a (generator, schema, adapter) triple over one rng seed."""

    def build(seed=0, typing_mode=TypingMode.DYNAMIC, spec=None, gen_catalog=None):
        cat = gen_catalog if gen_catalog is not None else catalog
        rng = random.Random(seed)
        schema = SchemaModel()
        gen_store = StatsStore(cat.features(), cat.ddl_rule_ids)
        gen = StatementGenerator(
            cat,
            gen_store,
            GenConfig(seed=seed, typing_mode=typing_mode),
            schema,
            rng,
        )
        adapter = MockAdapter(spec if spec is not None else clean_spec, cat)
        return gen, schema, adapter

    return build


def populate(gen, schema, adapter, tables=2, inserts=2):
    """Create a few tables with rows so query generation has relations."""
    for _ in range(tables):
        stmt = gen.generate_statement("TABLE")
        assert adapter.execute(stmt).ok
        schema.apply(stmt.ast, gen.catalog)
        for _ in range(inserts):
            ins = gen.generate_statement("INSERT")
            assert adapter.execute(ins).ok
            schema.apply(ins.ast, gen.catalog)
