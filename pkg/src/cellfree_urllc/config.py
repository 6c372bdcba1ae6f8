"""Simulation configuration.

Powers are given in dBm in the configuration and converted to linear mW
exactly once, through the ``*_mw`` properties.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MODES = ("cellfree", "cellular", "smallcell")
SCHEMES = ("mmse", "mr")
S_MODES = ("per_fade", "per_ue")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class AreaSpec:
    side_length: float = 150.0
    ap_height: float = 10.0
    wrap_around: bool = True

    def __post_init__(self):
        if not self.side_length > 0:
            raise ConfigError("side_length must be positive")
        if self.ap_height < 0:
            raise ConfigError("ap_height must be nonnegative")


@dataclass(frozen=True)
class SimConfig:
    area: AreaSpec = field(default_factory=AreaSpec)
    mode: str = "cellfree"
    scheme: str = "mmse"
    L: int = 100
    M: int = 1
    K: int = 40
    n_pilot: int = 40
    n: int = 300
    n_ul: int = 130
    n_dl: int = 130
    payload_bits: int = 160
    rho_ul_dbm: float = -10.0
    rho_dl_dbm: float = -10.0
    sigma2_ul_dbm: float = -96.0
    sigma2_dl_dbm: float = -96.0
    delta_deg: float = 25.0
    eps_target: float = 1e-5
    n_placements: int = 100
    n_fading: int = 300
    n_stat: int = 500
    master_seed: int = 0
    s_mode: str = "per_fade"
    angle_per_pair: bool = True
    per_realization_norm: bool = True
    quad_nodes: int = 200
    fade_chunk: int = 50

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.s_mode not in S_MODES:
            raise ConfigError(f"s_mode must be one of {S_MODES}, got {self.s_mode!r}")
        for name in ("L", "M", "K", "n_pilot", "n_ul", "n_dl", "n_placements", "n_fading", "quad_nodes", "fade_chunk"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.payload_bits < 0:
            raise ConfigError("payload_bits must be >= 0")
        if self.n_pilot < self.K:
            raise ConfigError("n_pilot < K needs pilot reuse, which is not supported")
        if self.n != self.n_pilot + self.n_ul + self.n_dl:
            raise ConfigError(
                f"frame mismatch: n={self.n} but n_pilot + n_ul + n_dl = "
                f"{self.n_pilot + self.n_ul + self.n_dl}"
            )
        if self.n_stat < 50:
            raise ConfigError("n_stat must be >= 50")
        if not 0.0 <= self.eps_target <= 1.0:
            raise ConfigError("eps_target must lie in [0, 1]")
        if not self.delta_deg > 0:
            raise ConfigError("delta_deg must be positive")
        if self.mode != "cellular":
            from .geometry import grid_shape

            grid_shape(self.L)

    @property
    def rho_ul(self):
        return float(dbm_to_mw(self.rho_ul_dbm))

    @property
    def rho_dl(self):
        return float(dbm_to_mw(self.rho_dl_dbm))

    @property
    def sigma2_ul(self):
        return float(dbm_to_mw(self.sigma2_ul_dbm))

    @property
    def sigma2_dl(self):
        return float(dbm_to_mw(self.sigma2_dl_dbm))

    @property
    def delta(self):
        return float(np.deg2rad(self.delta_deg))

    @property
    def antennas_per_ap(self):
        """Antennas per physical AP: ``L M`` co-located ones in cellular mode."""
        return self.L * self.M if self.mode == "cellular" else self.M

    @property
    def n_aps(self):
        return 1 if self.mode == "cellular" else self.L

    def replace(self, **changes):
        area_keys = {f.name for f in dataclasses.fields(AreaSpec)}
        area_changes = {k: changes.pop(k) for k in list(changes) if k in area_keys}
        if area_changes:
            changes["area"] = dataclasses.replace(changes.get("area", self.area), **area_changes)
        try:
            return dataclasses.replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "np" in data:
            data["n_pilot"] = data.pop("np")
        area = data.pop("area", {}) or {}
        known = {f.name for f in dataclasses.fields(cls)}
        area_keys = {f.name for f in dataclasses.fields(AreaSpec)}
        for k in list(data):
            if k in area_keys:
                area[k] = data.pop(k)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(area=AreaSpec(**area), **data)

    @classmethod
    def from_file(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)


def desk_config(**overrides):
    """Scaled-down setup: 75 m x 75 m, K = np = 8, 130 + 130 data symbols."""
    base = dict(
        area=AreaSpec(side_length=75.0),
        K=8,
        n_pilot=8,
        n=268,
        n_ul=130,
        n_dl=130,
        L=16,
        n_placements=50,
        n_fading=200,
    )
    base.update(overrides)
    return SimConfig().replace(**base)
