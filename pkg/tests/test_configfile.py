"""Plain-text config parsing and content hashing."""
from __future__ import annotations

import pytest

from cgp.configfile import ConfigError, config_hash, dump_config, load_config, parse_config_text


def test_scalars_and_lists():
    cfg = parse_config_text(
        "n_fingers = 3\n"
        "kn = 6000.0\n"
        "use_gravity = true\n"
        "task = box_flip\n"
        "link_lengths = 0.05, 0.04, 0.03\n"
    )
    assert cfg["n_fingers"] == 3
    assert cfg["kn"] == 6000.0
    assert cfg["use_gravity"] is True
    assert cfg["task"] == "box_flip"
    assert cfg["link_lengths"] == [0.05, 0.04, 0.03]


def test_comments_and_blank_lines_ignored():
    cfg = parse_config_text("# header\n\na = 1\n  # indented comment\nb = 2\n")
    assert cfg == {"a": 1, "b": 2}


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("a = 1\na = 2\n")


def test_missing_separator_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("just some words\n")


def test_hash_stable_and_order_independent():
    a = parse_config_text("x = 1\ny = 2\n")
    b = parse_config_text("y = 2\nx = 1\n")
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 64


def test_hash_changes_with_value():
    a = parse_config_text("x = 1\n")
    b = parse_config_text("x = 2\n")
    assert config_hash(a) != config_hash(b)


def test_dump_load_round_trip(tmp_path):
    cfg = {"n": 4, "rate": 0.5, "flag": False, "name": "wipe", "dims": [1.0, 2.0]}
    path = tmp_path / "trial.cfg"
    dump_config(cfg, path)
    assert load_config(path) == cfg
