import numpy as np
import pytest

from vhsip_landing.config import (
    ConfigError, Gains, RobotModel, RunConfig, SimSettings, VhsipParams,
    config_from_dict, config_to_dict, load_config, save_config)


def test_defaults_valid():
    cfg = RunConfig()
    assert cfg.vhsip.N == int(np.ceil(cfg.vhsip.t_c / cfg.vhsip.Ts))
    assert cfg.robot.m == cfg.vhsip.m


def test_critically_damped_coupling():
    p = VhsipParams(k=4800.0)
    assert np.isclose(p.d, 2.0 * np.sqrt(4800.0 * p.m))
    p2 = p.with_stiffness(1200.0)
    assert np.isclose(p2.d, 2.0 * np.sqrt(1200.0 * p.m))


def test_rejects_bad_geometry():
    with pytest.raises(ConfigError):
        VhsipParams(l0=0.1, delta_z=0.2)
    with pytest.raises(ConfigError):
        VhsipParams(m=-1.0)
    with pytest.raises(ConfigError):
        RobotModel(link_lengths=np.array([0.1, -0.2, 0.2]))
    with pytest.raises(ConfigError):
        SimSettings(physics_dt=0.01)


def test_unknown_key_named_in_error():
    with pytest.raises(ConfigError, match="not_a_key"):
        config_from_dict({"vhsip": {"not_a_key": 1.0}})
    with pytest.raises(ConfigError, match="typo_block"):
        config_from_dict({"typo_block": {}})


def test_round_trip(tmp_path):
    cfg = RunConfig()
    cfg.seed = 42
    cfg.vhsip.t_c = 1.0
    path = tmp_path / "config.yaml"
    save_config(cfg, path)
    back = load_config(path)
    assert back.seed == 42
    assert config_to_dict(back) == config_to_dict(cfg)


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    cfg = load_config(path)
    assert cfg.seed == RunConfig().seed


def test_gains_validation():
    with pytest.raises(ConfigError):
        Gains(gamma=np.array([0.1, -0.1, 0.1]))
    with pytest.raises(ConfigError):
        Gains(w_p=0.0, w_u=0.0)
