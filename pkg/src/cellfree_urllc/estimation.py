"""Uplink pilots with orthogonal sequences and per-(UE, AP) MMSE estimation.

With orthogonal pilots the despread observation of UE ``i`` at AP ``l`` is a
sufficient statistic,

    y_il = sqrt(rho np) h_il + z',   z' ~ CN(0, sigma2 I_M),

so it is drawn directly instead of materializing the ``M x np`` pilot block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import complex_normal


class UnsupportedFeature(ValueError):
    pass


@dataclass(frozen=True)
class PilotConfig:
    n_pilot: int
    rho_ul: float
    sigma2_ul: float
    assignment: tuple | None = None

    def check(self, K):
        assign = tuple(range(K)) if self.assignment is None else tuple(self.assignment)
        if len(assign) != K:
            raise ValueError("pilot assignment must list one pilot per UE")
        if len(set(assign)) != K:
            raise UnsupportedFeature("shared pilots (pilot contamination) are not supported")
        if max(assign) >= self.n_pilot or min(assign) < 0:
            raise ValueError("pilot index outside 0..n_pilot-1")

    @property
    def gain(self):
        """``rho np``: power gain of the despread pilot."""
        return self.rho_ul * self.n_pilot

    @classmethod
    def from_sim(cls, cfg):
        return cls(cfg.n_pilot, cfg.rho_ul, cfg.sigma2_ul)


@dataclass(frozen=True)
class ChannelEstimate:
    hhat: np.ndarray  # (..., K, n_aps, Ma)
    Phi: np.ndarray  # (K, n_aps, Ma, Ma)
    C: np.ndarray  # (K, n_aps, Ma, Ma)


def despread_pilots(h, pilot_cfg, rng):
    """Despread pilot observations for channels ``h`` of shape ``(..., K, n_aps, Ma)``."""
    pilot_cfg.check(h.shape[-3])
    noise = np.sqrt(pilot_cfg.sigma2_ul) * complex_normal(rng, h.shape)
    return np.sqrt(pilot_cfg.gain) * h + noise


def estimator_matrices(R, pilot_cfg):
    """Return ``(W, Phi, C)`` with ``hhat = W y`` for every (UE, AP) pair."""
    R = np.asarray(R)
    Ma = R.shape[-1]
    Q = pilot_cfg.gain * R + pilot_cfg.sigma2_ul * np.eye(Ma)
    X = np.linalg.solve(Q, R)  # Q^-1 R, which equals R Q^-1
    W = np.sqrt(pilot_cfg.gain) * X
    Phi = pilot_cfg.gain * R @ X
    Phi = 0.5 * (Phi + np.conj(np.swapaxes(Phi, -1, -2)))
    C = R - Phi
    C = 0.5 * (C + np.conj(np.swapaxes(C, -1, -2)))
    return W, Phi, C


def mmse_channel_estimate(y, R, pilot_cfg):
    """MMSE estimates from despread observations ``y`` of shape ``(..., K, n_aps, Ma)``."""
    W, Phi, C = estimator_matrices(R, pilot_cfg)
    hhat = np.einsum("kamn,...kan->...kam", W, y)
    return ChannelEstimate(hhat=hhat, Phi=Phi, C=C)
