"""Flat key=value experiment configuration parsing and validation."""

import pytest

from geotopics.config import (
    ConfigError,
    ExperimentConfig,
    classifier_params,
    load_config,
    parse_config,
)

MINIMAL = """\
records = records.jsonl
regions = regions.csv
rates = rates.csv
"""


def test_minimal_config_gets_defaults():
    cfg = parse_config(MINIMAL, base_dir="/data")
    assert cfg.records == "/data/records.jsonl"
    assert cfg.regions == "/data/regions.csv"
    assert cfg.train_years == (2014, 2015)
    assert cfg.test_years == (2016,)
    assert cfg.k_list == (5, 10, 20, 50, 100, 200)
    assert cfg.multiplier_list == (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)
    assert cfg.feature_sets == ("baseline", "smooth")
    assert cfg.classifiers == ("gaussian_nb",)
    assert cfg.smooth_method == "concat"
    assert cfg.lda_alpha is None
    assert cfg.assign_unlocated is True
    assert cfg.timing_in_report is False
    assert cfg.seed == 0


def test_typed_lists_and_scalars_parse():
    text = MINIMAL + (
        "k_list = 5, 10\n"
        "radius_km_list = 25.5,100\n"
        "multiplier_list = 0, 0.25\n"
        "train_years = 2010,2011\n"
        "test_years = 2012\n"
        "feature_sets = baseline\n"
        "classifiers = knn, random_forest\n"
        "slang_weight = 0.25\n"
        "lda_alpha = 0.5\n"
        "rf_max_depth = 4\n"
        "assign_unlocated = no\n"
        "timing_in_report = true\n"
        "seed = 99\n"
    )
    cfg = parse_config(text)
    assert cfg.k_list == (5, 10)
    assert cfg.radius_km_list == (25.5, 100.0)
    assert cfg.multiplier_list == (0.0, 0.25)
    assert cfg.train_years == (2010, 2011)
    assert cfg.test_years == (2012,)
    assert cfg.classifiers == ("knn", "random_forest")
    assert cfg.slang_weight == 0.25
    assert cfg.lda_alpha == 0.5
    assert cfg.rf_max_depth == 4
    assert cfg.assign_unlocated is False
    assert cfg.timing_in_report is True
    assert cfg.seed == 99


def test_comments_and_blank_lines_ignored():
    text = "# leading comment\n\n" + MINIMAL + "seed = 7  # trailing comment\n"
    assert parse_config(text).seed == 7


def test_none_like_values():
    text = MINIMAL + "lda_alpha = none\nrf_max_depth =\nnb_threshold = None\n"
    cfg = parse_config(text)
    assert cfg.lda_alpha is None
    assert cfg.rf_max_depth is None
    assert cfg.nb_threshold is None


def test_unknown_key_reports_line_number():
    text = MINIMAL + "not_a_key = 5\n"
    with pytest.raises(ConfigError, match="line 4: unknown key 'not_a_key'"):
        parse_config(text)


def test_duplicate_key_reports_line_number():
    text = MINIMAL + "seed = 1\nseed = 2\n"
    with pytest.raises(ConfigError, match="line 5: duplicate key 'seed'"):
        parse_config(text)


def test_missing_equals_reports_line():
    with pytest.raises(ConfigError, match="line 1: expected key = value"):
        parse_config("records records.jsonl\n")


def test_bad_typed_value_reports_key():
    text = MINIMAL + "k_list = five\n"
    with pytest.raises(ConfigError, match="line 4: k_list"):
        parse_config(text)
    with pytest.raises(ConfigError, match="expected a boolean"):
        parse_config(MINIMAL + "assign_unlocated = maybe\n")


def test_absolute_paths_left_alone():
    text = "records = /abs/r.jsonl\nregions = regions.csv\nrates = rates.csv\n"
    cfg = parse_config(text, base_dir="/data")
    assert cfg.records == "/abs/r.jsonl"
    assert cfg.regions == "/data/regions.csv"


@pytest.mark.parametrize(
    "extra, match",
    [
        ("train_years = 2014\ntest_years = 2014\n", "overlap"),
        ("k_list = 0\n", "k_list entries"),
        ("radius_km_list = -5\n", "radius_km_list entries"),
        ("multiplier_list = -1\n", "multiplier_list entries"),
        ("feature_sets = spectral\n", "unknown feature sets"),
        ("classifiers = svm\n", "unknown classifiers"),
        ("smooth_method = kernel\n", "smooth_method"),
        ("slang_weight = -0.5\n", "slang_weight"),
        ("feature_sets = slang\n", "require a lexicon"),
        ("lda_sweeps = 0\n", "sweep counts"),
        ("min_df = 0\n", "min_df"),
        ("max_df_fraction = 0\n", "max_df_fraction"),
        ("max_df_fraction = 1.5\n", "max_df_fraction"),
    ],
)
def test_validation_failures(extra, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(MINIMAL + extra)


def test_missing_required_path():
    with pytest.raises(ConfigError, match="missing required path 'rates'"):
        parse_config("records = r.jsonl\nregions = g.csv\n")


def test_empty_axis_rejected():
    with pytest.raises(ConfigError, match="k_list must be non-empty"):
        parse_config(MINIMAL + "k_list = ,\n")


def test_load_config_resolves_relative_to_file(tmp_path):
    cfg_path = tmp_path / "exp.cfg"
    cfg_path.write_text(MINIMAL)
    cfg = load_config(str(cfg_path))
    assert cfg.records == str(tmp_path / "records.jsonl")


def test_load_config_missing_file():
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config("/nonexistent/exp.cfg")


def test_content_hash_tracks_changes():
    a = parse_config(MINIMAL)
    b = parse_config(MINIMAL)
    assert a.content_hash() == b.content_hash()
    c = parse_config(MINIMAL + "seed = 1\n")
    assert a.content_hash() != c.content_hash()


def test_classifier_params_mapping():
    cfg = parse_config(
        MINIMAL + "knn_k = 7\nrf_trees = 9\nrf_max_depth = 2\nmnb_count_scale = 500\n"
    )
    assert classifier_params(cfg, "knn", k=5) == {"k": 7}
    assert classifier_params(cfg, "random_forest", k=5) == {
        "n_trees": 9,
        "max_depth": 2,
        "min_leaf": 1,
    }
    # Bernoulli threshold defaults to a uniform topic level for the swept K
    assert classifier_params(cfg, "bernoulli_nb", k=4) == {"binarize_threshold": 0.25}
    assert classifier_params(cfg, "multinomial_nb", k=4) == {"count_scale": 500.0}
    assert classifier_params(cfg, "gaussian_nb", k=4) == {}


def test_classifier_params_explicit_threshold():
    cfg = parse_config(MINIMAL + "nb_threshold = 0.1\n")
    assert classifier_params(cfg, "bernoulli_nb", k=4) == {"binarize_threshold": 0.1}


def test_direct_dataclass_validate():
    cfg = ExperimentConfig(records="r", regions="g", rates="x", k_list=())
    with pytest.raises(ConfigError, match="k_list must be non-empty"):
        cfg.validate()
