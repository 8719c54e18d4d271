from adaquery.campaign import MetricsWindow
from adaquery.features import FeatureState, StatsStore
from adaquery.plots import render_campaign_figures

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_figures_written_as_png(tmp_path, catalog):
    windows = [
        MetricsWindow(window=0, executed=10, succeeded=6),
        MetricsWindow(window=1, executed=10, succeeded=9),
    ]
    store = StatsStore(catalog.features(), catalog.ddl_rule_ids)
    store.get("FULL_JOIN").state = FeatureState.UNSUPPORTED
    figures = tmp_path / "figures"
    render_campaign_figures(windows, store, figures)
    for name in ("validity.png", "feature_states.png"):
        data = (figures / name).read_bytes()
        assert data.startswith(PNG_MAGIC)
        assert len(data) > 1000


def test_empty_window_list_is_safe(tmp_path, catalog):
    store = StatsStore(catalog.features(), catalog.ddl_rule_ids)
    render_campaign_figures([], store, tmp_path / "figs")
    assert (tmp_path / "figs" / "validity.png").is_file()
    assert (tmp_path / "figs" / "feature_states.png").is_file()


def test_render_is_deterministic(tmp_path, catalog):
    store = StatsStore(catalog.features(), catalog.ddl_rule_ids)
    windows = [MetricsWindow(window=0, executed=4, succeeded=4)]
    render_campaign_figures(windows, store, tmp_path / "a")
    render_campaign_figures(windows, store, tmp_path / "b")
    assert (tmp_path / "a" / "validity.png").read_bytes() == \
        (tmp_path / "b" / "validity.png").read_bytes()
