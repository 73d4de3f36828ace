import pytest

from unsee.config import parse_config_file, parse_config_text
from unsee.errors import ConfigError

BASE = """
corpus = data/corpus.txt
dev = data/dev.tsv
out_dir = runs/demo
epochs = 3
"""


def test_minimal_config():
    run = parse_config_text(BASE)
    assert run.corpus == "data/corpus.txt"
    assert run.train.epochs == 3
    assert run.vocab is None
    # defaults untouched
    assert run.train.objective == "barlow_twins"
    assert run.train.batch_size == 32


def test_paper_style_config_accepted():
    run = parse_config_text(
        BASE + "objective = barlow_twins\nlambda = 0.0051\ndecay = 0.999\n"
    )
    assert run.train.objective_config.bt_lambda == 0.0051
    assert run.train.decay == 0.999


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="lamda"):
        parse_config_text(BASE + "lamda = 0.1\n")


def test_missing_required_key_named():
    with pytest.raises(ConfigError, match="out_dir"):
        parse_config_text("corpus = a\ndev = b\nepochs = 1\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text(BASE + "epochs = 5\n")


def test_bad_value_named():
    with pytest.raises(ConfigError, match="epochs"):
        parse_config_text("corpus = a\ndev = b\nout_dir = c\nepochs = three\n")


def test_bad_variant_rejected():
    with pytest.raises(ConfigError, match="variant"):
        parse_config_text(BASE + "variant = double_projection\n")


def test_comments_and_blank_lines_ignored():
    run = parse_config_text(
        "# a comment\n\n" + BASE + "seed = 9  # trailing comment\n"
    )
    assert run.train.seed == 9


def test_line_without_equals_rejected():
    with pytest.raises(ConfigError, match="line"):
        parse_config_text(BASE + "justaword\n")


def test_boolean_keys_parse():
    run = parse_config_text(BASE + "feed_forward = false\nbyol_symmetrize = true\n")
    assert run.train.feed_forward is False
    assert run.train.objective_config.byol_symmetrize is True
    with pytest.raises(ConfigError, match="feed_forward"):
        parse_config_text(BASE + "feed_forward = maybe\n")


def test_objective_hyperparameters_flow_through():
    run = parse_config_text(
        BASE + "objective = corinfomax\ncim_w_inv = 1500\ncim_r_ini = 2.0\n"
    )
    assert run.train.objective_config.cim_w_inv == 1500.0
    assert run.train.objective_config.cim_r_ini == 2.0


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config_file(tmp_path / "nope.cfg")


def test_trainconfig_validation_surfaces_as_config_error():
    with pytest.raises(ConfigError):
        parse_config_text(BASE + "batch_size = 1\n")
