import json

import pytest

from dronesentry.config import Config
from dronesentry.errors import ConfigError


def test_defaults():
    cfg = Config()
    assert cfg.phase.alt_tol_m == 0.5
    assert cfg.phase.pos_tol_m == 1.0
    assert cfg.rules.holding_threshold == 0.99
    assert cfg.rules.widen_budget == 0.01
    assert cfg.rules.latency_ms == 2000
    assert cfg.detect.kmeans_k == 5
    assert cfg.detect.lof_k == 20
    assert cfg.detect.ocsvm_nu == 0.05
    assert cfg.detect.max_train == 450
    assert cfg.window.length == 10
    assert cfg.window.alert_fraction == 0.3
    assert cfg.window.sustained_run == 3
    assert cfg.detect.features == (
        "rel_alt", "roll", "pitch", "yaw", "throttle", "groundspeed", "climb",
    )


def test_load_file_and_round_trip(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "phase": {"alt_tol_m": 0.8},
        "rules": {"min_support": 0.2},
        "window": {"length": 20},
    }))
    cfg = Config.load(path)
    assert cfg.phase.alt_tol_m == 0.8
    assert cfg.rules.min_support == 0.2
    assert cfg.window.length == 20
    assert cfg.detect.kmeans_k == 5
    assert Config.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_unknown_keys_are_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"rules": {"min_confidence": 0.5}}))
    with pytest.raises(ConfigError):
        Config.load(path)
    path.write_text(json.dumps({"mystery": {}}))
    with pytest.raises(ConfigError):
        Config.load(path)


def test_overrides():
    cfg = Config()
    cfg.apply_override("rules.min_support=0.25")
    cfg.apply_override("window.length=15")
    cfg.apply_override("detect.dbscan_eps=2.5")
    assert cfg.rules.min_support == 0.25
    assert cfg.window.length == 15
    assert cfg.detect.dbscan_eps == 2.5
    with pytest.raises(ConfigError):
        cfg.apply_override("nope.key=1")
    with pytest.raises(ConfigError):
        cfg.apply_override("rules.min_support")
    with pytest.raises(ConfigError):
        cfg.apply_override("window.length=abc")
