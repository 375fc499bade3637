"""Tests for settings and run configuration loading"""

import json

import pytest

from app.core.config import RunConfig, Settings, config_hash, load_run_config
from app.helpers.errors import ConfigError
from app.helpers.schemas import ThresholdCriterion


@pytest.fixture
def settings():
    return Settings(_env_file=None, seed=0, jobs=1)


def write_config(tmp_path, data) -> object:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_defaults(settings):
    cfg = load_run_config(settings=settings)
    assert cfg == RunConfig()
    assert cfg.protocol.folds == 10
    assert cfg.protocol.criterion == ThresholdCriterion.YOUDEN


def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("ADW_SEED", "17")
    monkeypatch.setenv("ADW_JOBS", "4")
    monkeypatch.setenv("ADW_LOG_LEVEL", "DEBUG")
    env = Settings(_env_file=None)
    assert (env.seed, env.jobs, env.log_level) == (17, 4, "DEBUG")
    cfg = load_run_config(settings=env)
    assert (cfg.seed, cfg.jobs) == (17, 4)


def test_precedence(tmp_path, settings):
    """Test defaults < config file < flags, merged per nested key"""
    path = write_config(
        tmp_path,
        {"seed": 5, "flow": {"num_blocks": 2, "hidden_units": 16}},
    )
    cfg = load_run_config(
        path,
        overrides={"seed": 9, "flow": {"num_blocks": 6}, "jobs": None},
        settings=settings,
    )
    assert cfg.seed == 9
    assert cfg.jobs == 1
    assert cfg.flow.num_blocks == 6
    assert cfg.flow.hidden_units == 16
    assert cfg.train.epochs == 40


def test_none_overrides_are_ignored(tmp_path, settings):
    path = write_config(tmp_path, {"protocol": {"folds": 3}})
    cfg = load_run_config(path, {"protocol": {"folds": None}}, settings)
    assert cfg.protocol.folds == 3


@pytest.mark.parametrize(
    "content,message",
    [
        (None, "Cannot read config file"),
        ("{broken", "Cannot read config file"),
        ("[1, 2]", "must hold a JSON object"),
        ('{"sede": 1}', "Invalid configuration"),
        ('{"flow": {"blocks": 2}}', "Invalid configuration"),
        ('{"protocol": {"folds": 0}}', "Invalid configuration"),
    ],
)
def test_bad_config_file(tmp_path, settings, content, message):
    path = tmp_path / "run.json"
    if content is not None:
        path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigError, match=message) as excinfo:
        load_run_config(path, settings=settings)
    assert excinfo.value.exit_code == 1


def test_config_hash_is_stable():
    a = RunConfig(seed=3)
    b = RunConfig.model_validate({"seed": 3, "flow": {}})
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 64
    assert config_hash(a) != config_hash(RunConfig(seed=4))
