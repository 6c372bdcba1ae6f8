import json

import pytest

from cellfree_urllc.config import AreaSpec, ConfigError, SimConfig, dbm_to_mw, desk_config


def test_defaults_are_consistent():
    c = SimConfig()
    assert c.n == c.n_pilot + c.n_ul + c.n_dl
    assert (c.L, c.M, c.K, c.payload_bits) == (100, 1, 40, 160)
    assert c.rho_ul == pytest.approx(0.1)
    assert c.sigma2_ul == pytest.approx(10 ** -9.6)


def test_dbm_conversion():
    assert dbm_to_mw(0.0) == 1.0
    assert dbm_to_mw(-10.0) == pytest.approx(0.1)


@pytest.mark.parametrize(
    "kw",
    [dict(n_pilot=10), dict(n=301), dict(mode="dense"), dict(scheme="zf"), dict(n_stat=10), dict(eps_target=2.0)],
)
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def test_negative_area():
    with pytest.raises(ConfigError):
        AreaSpec(side_length=-1)


def test_roundtrip_and_aliases(tmp_path):
    c = desk_config(L=25)
    assert SimConfig.from_dict(c.to_dict()) == c
    d = {"np": 8, "K": 8, "n": 268, "side_length": 75.0}
    c2 = SimConfig.from_dict(d)
    assert c2.n_pilot == 8 and c2.area.side_length == 75.0
    path = tmp_path / "c.json"
    path.write_text(json.dumps(c.to_dict()))
    assert SimConfig.from_file(path) == c


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"bogus": 1})


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        SimConfig.from_file(tmp_path / "missing.json")


def test_replace_routes_area_keys():
    c = SimConfig().replace(side_length=75.0, L=16)
    assert c.area.side_length == 75.0 and c.L == 16


def test_desk_config():
    c = desk_config()
    assert (c.K, c.n_pilot, c.n_ul, c.n_dl, c.area.side_length) == (8, 8, 130, 130, 75.0)
    assert (c.n_placements, c.n_fading) == (50, 200)
