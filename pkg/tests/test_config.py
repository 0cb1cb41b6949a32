import pytest

from sublinlaw.config import (ConfigError, apply_overrides, digest, load_config, parse_override, shipped_configs,
                              validate)

BASE = {"mode": "expect", "ambiguity": [{"kind": "gaussian", "mean": 0, "sd": 1}], "function": {"name": "identity"}}


def _field(cfg):
    with pytest.raises(ConfigError) as err:
        validate(cfg)
    return err.value.field


def test_defaults_filled():
    cfg = validate(BASE)
    assert cfg["master_seed"] == 0 and cfg["quota"] == 1.0 and cfg["schema_version"] == "1"


@pytest.mark.parametrize("patch, field", [
    ({"ambiguity": [{"kind": "gaussian", "mean": 0, "sd": -1}]}, "ambiguity.0.sd"),
    ({"ambiguity": [{"kind": "uniform", "a": 0}]}, "ambiguity.0"),
    ({"n": 0}, "n"),
    ({"tail_fraction": 1.0}, "tail_fraction"),
    ({"quota": 1.5}, "quota"),
    ({"colour": "red"}, "colour"),
    ({"target": {"kind": "constant", "bogus": 1}}, "target.bogus"),
    ({"mode": "dance"}, "mode"),
])
def test_invalid_fields_are_named(patch, field):
    assert _field({**BASE, **patch}) == field


def test_mode_requirements():
    assert _field({"mode": "simulate", "ambiguity": BASE["ambiguity"]}) == "n"


def test_overrides():
    assert parse_override("a.b=3") == (["a", "b"], 3)
    assert parse_override("name=plain") == (["name"], "plain")
    cfg = apply_overrides(BASE, ["ambiguity.0.sd=2.5", "target.kind=\"constant\"", "n=10"])
    assert cfg["ambiguity"][0]["sd"] == 2.5 and cfg["target"] == {"kind": "constant"} and cfg["n"] == 10
    assert BASE["ambiguity"][0]["sd"] == 1  # input untouched
    with pytest.raises(ConfigError):
        parse_override("no-equals-sign")


def test_digest_is_key_order_independent():
    assert digest({"a": 1, "b": [1, 2]}) == digest({"b": [1, 2], "a": 1})
    assert digest({"a": 1.0}) != digest({"a": 1.5})


def test_shipped_configs_validate():
    names = shipped_configs()
    assert {"steering", "cluster", "baseline_lower", "baseline_upper", "schedule"} <= set(names)
    for name in names:
        validate(load_config(name))


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config("definitely-not-shipped")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(bad))
