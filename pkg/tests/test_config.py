import json
from fractions import Fraction

import pytest

from config import ConfigError, Settings, expand_tokens, load_settings, load_sweep_config
from core_numeric import ParameterError

KNOWN = ("good", "stirling", "gamma-moment")


def write_config(tmp_path, data):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_defaults():
    settings = Settings()
    assert settings.tolerance == 1e-9
    assert settings.max_order == 2000
    assert settings.samples == 1_000_000
    assert settings.z == 5.0
    assert settings.mode == "exact"
    assert not settings.mc


def test_settings_validation():
    with pytest.raises(ConfigError):
        Settings(tolerance=0)
    with pytest.raises(ConfigError):
        Settings(mode="symbolic")
    with pytest.raises(ConfigError):
        Settings().updated(workers=0)
    with pytest.raises(ConfigError):
        Settings().updated(colour="red")
    assert issubclass(ConfigError, ParameterError)


def test_updated_ignores_none():
    settings = Settings().updated(tolerance=None, seed=7)
    assert settings.tolerance == 1e-9
    assert settings.seed == 7


def test_environment_layer(monkeypatch, tmp_path):
    monkeypatch.setenv("SUMVERIFY_TOLERANCE", "1e-6")
    monkeypatch.setenv("SUMVERIFY_SAMPLES", "5000")
    settings = load_settings(str(tmp_path / "missing.env"))
    assert settings.tolerance == 1e-6
    assert settings.samples == 5000


def test_env_file_layer(tmp_path):
    env_file = tmp_path / "test.env"
    env_file.write_text("SUMVERIFY_SEED=99\nSUMVERIFY_LOG_LEVEL=DEBUG\n", encoding="utf-8")
    settings = load_settings(str(env_file))
    assert settings.seed == 99
    assert settings.log_level == "DEBUG"


def test_bad_environment_value(monkeypatch, tmp_path):
    monkeypatch.setenv("SUMVERIFY_MAX_ORDER", "lots")
    with pytest.raises(ConfigError, match="SUMVERIFY_MAX_ORDER"):
        load_settings(str(tmp_path / "missing.env"))


@pytest.mark.parametrize("value, tokens", [
    ("1..3", ("1", "2", "3")),
    (["1,2", "1/2,3"], ("1,2", "1/2,3")),
    (["0..1", 5], ("0", "1", "5")),
    ("1/2", ("1/2",)),
])
def test_expand_tokens(value, tokens):
    assert expand_tokens(value, "k") == tokens


@pytest.mark.parametrize("value", [[], "3..1", [None], [True]])
def test_expand_tokens_rejects(value):
    with pytest.raises(ConfigError):
        expand_tokens(value, "k")


def test_load_sweep_config(tmp_path):
    path = write_config(tmp_path, {
        "mode": "exact",
        "tolerance": 1e-8,
        "monte_carlo": {"enabled": True, "samples": 2000, "seed": 3},
        "outputs": {"json": "out/r.json"},
        "runs": [
            {"identity": "stirling", "grid": {"m": "0..2", "n": ["1", "2"]}},
            {"identity": "good", "grid": {"xs": "1,2"}, "rhs_offset": "1/10"},
        ],
    })
    config = load_sweep_config(path, KNOWN)
    assert config.overrides == {"mode": "exact", "tolerance": 1e-8, "mc": True, "samples": 2000, "seed": 3}
    assert config.outputs == {"json": "out/r.json"}
    stirling_run, good_run = config.runs
    assert stirling_run.size == 6
    assert list(stirling_run.points())[:3] == [
        {"m": "0", "n": "1"}, {"m": "0", "n": "2"}, {"m": "1", "n": "1"},
    ]
    assert good_run.rhs_offset == Fraction(1, 10)


@pytest.mark.parametrize("data, message", [
    ({"runs": []}, "non-empty"),
    ({"runs": [{"identity": "nope", "grid": {"m": "1"}}]}, "unknown identity"),
    ({"runs": [{"identity": "stirling", "grid": {"m": [], "n": "1"}}]}, "empty"),
    ({"runs": [{"identity": "stirling"}]}, "grid"),
    ({"runs": [{"identity": "good", "grid": {"xs": "1,2"}}], "monte_carlo": {"samples": "many"}}, "many"),
])
def test_bad_sweep_configs(tmp_path, data, message):
    with pytest.raises(ConfigError, match=message):
        load_sweep_config(write_config(tmp_path, data), KNOWN)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_sweep_config(str(tmp_path / "absent.json"), KNOWN)
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_sweep_config(str(broken), KNOWN)


def test_mode_and_monte_carlo_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("SUMVERIFY_MODE", "float")
    monkeypatch.setenv("SUMVERIFY_MC", "yes")
    settings = load_settings(str(tmp_path / "missing.env"))
    assert settings.mode == "float"
    assert settings.mc
    monkeypatch.setenv("SUMVERIFY_MC", "maybe")
    with pytest.raises(ConfigError, match="SUMVERIFY_MC"):
        load_settings(str(tmp_path / "missing.env"))
