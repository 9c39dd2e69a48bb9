import json

import pytest

from magorbit.config import ExperimentConfig, load_config, parse_config
from magorbit.errors import ConfigurationError

BASE = {"kind": "geodesic", "algebra": {"family": "so", "n": 3}, "a": [0, 0, 1]}


def test_empty_config_lists_every_missing_field():
    with pytest.raises(ConfigurationError) as info:
        parse_config({})
    msg = str(info.value)
    for name in ("kind", "algebra", "a"):
        assert f"{name}: Field required" in msg


def test_field_paths_in_errors():
    with pytest.raises(ConfigurationError) as info:
        parse_config({**BASE, "h": -1, "algebra": {"family": "so"}})
    msg = str(info.value)
    assert "h:" in msg and "algebra" in msg


def test_kind_specific_requirements():
    with pytest.raises(ConfigurationError) as info:
        parse_config({**BASE, "kind": "radius_scan", "a": [0, 0, 2]})
    assert "epsilons" in str(info.value) and "unit" in str(info.value)
    with pytest.raises(ConfigurationError):
        parse_config({**BASE, "kind": "certify"})
    with pytest.raises(ConfigurationError):
        parse_config({**BASE, "unknown_field": 1})


def test_hash_ignores_output_dir():
    a = parse_config({**BASE, "out": "x"})
    b = parse_config({**BASE, "out": "y"})
    c = parse_config({**BASE, "epsilon": 0.5})
    assert a.config_hash() == b.config_hash() != c.config_hash()
    assert len(a.config_hash()) == 12


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(BASE))
    assert isinstance(load_config(p), ExperimentConfig)
    p.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_config(p)
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.json")
