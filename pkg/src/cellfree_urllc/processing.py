"""Centralized combining, duality precoding and scalar-channel reduction.

Arrays follow one layout throughout: fading realizations first, then UEs,
then the collective antenna index ``D = n_aps * Ma``.  So channels, estimates,
combiners and precoders all have shape ``(N, K, D)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import correlation_factors, sample_channels
from .estimation import PilotConfig, despread_pilots, estimator_matrices
from .fbl import ScalarChannelPoint, log_m1_from_bits


class SolverFailure(ArithmeticError):
    """Non-finite entries out of a linear solve."""


def _block_diag(blocks):
    """``(A, Ma, Ma)`` blocks to a dense ``(A*Ma, A*Ma)`` matrix."""
    A, Ma, _ = blocks.shape
    out = np.zeros((A * Ma, A * Ma), dtype=blocks.dtype)
    for a in range(A):
        out[a * Ma:(a + 1) * Ma, a * Ma:(a + 1) * Ma] = blocks[a]
    return out


@dataclass(frozen=True)
class LinkModel:
    """Per-placement quantities shared by every fading realization."""

    factors: np.ndarray  # (K, A, Ma, Ma), F F^H = R
    W: np.ndarray  # (K, A, Ma, Ma), MMSE estimation filters
    C: np.ndarray  # (K, A, Ma, Ma), estimation-error covariances
    best_ap: np.ndarray  # (K,), AP index with the largest beta
    pilot: PilotConfig

    @classmethod
    def build(cls, corrs, pilot):
        pilot.check(corrs.K)
        F = correlation_factors(corrs.R, corrs.beta)
        W, _, C = estimator_matrices(corrs.R, pilot)
        return cls(F, W, C, np.argmax(corrs.beta, axis=1), pilot)

    @property
    def K(self):
        return self.factors.shape[0]

    @property
    def n_aps(self):
        return self.factors.shape[1]

    @property
    def Ma(self):
        return self.factors.shape[2]

    def draw(self, n_fades, rng):
        """Sample ``(h, hhat)`` of shape ``(N, K, D)`` for ``n_fades`` fades."""
        h = sample_channels(self.factors, n_fades, rng)
        y = despread_pilots(h, self.pilot, rng)
        hhat = np.einsum("kamn,tkan->tkam", self.W, y)
        N = n_fades
        return h.reshape(N, self.K, -1), hhat.reshape(N, self.K, -1)


def compute_combiners(hhat, C, rho_ul, sigma2_ul, scheme, mode, best_ap=None):
    """Combining vectors ``u_i`` for every fade and UE, shape ``(N, K, D)``.

    MMSE: ``u_i = rho (rho sum_j (hhat_j hhat_j^H + C_j) + sigma2 I)^-1 hhat_i``
    with one shared solve per fade.  In small-cell mode each UE is combined
    by its ``best_ap`` alone and the vector is zero elsewhere.
    """
    N, K, D = hhat.shape
    A = C.shape[1]
    Ma = C.shape[-1]
    if mode == "smallcell":
        if best_ap is None:
            raise ValueError("small-cell combining needs best_ap")
        hb = hhat.reshape(N, K, A, Ma)
        U = np.zeros_like(hb)
        if scheme == "mr":
            for i in range(K):
                U[:, i, best_ap[i]] = hb[:, i, best_ap[i]]
        else:
            for l in np.unique(best_ap):
                served = np.flatnonzero(best_ap == l)
                Hl = hb[:, :, l, :]  # (N, K, Ma)
                Z = rho_ul * (np.einsum("tkm,tkn->tmn", Hl, Hl.conj()) + C[:, l].sum(axis=0))
                Z = Z + sigma2_ul * np.eye(Ma)
                sol = np.linalg.solve(Z, rho_ul * np.swapaxes(Hl[:, served, :], 1, 2))
                U[:, served, l, :] = np.swapaxes(sol, 1, 2)
        U = U.reshape(N, K, D)
    elif scheme == "mr":
        U = hhat.copy()
    else:
        Csum = _block_diag(C.sum(axis=0))
        H = np.swapaxes(hhat, 1, 2)  # (N, D, K)
        Z = rho_ul * (H @ np.conj(np.swapaxes(H, 1, 2)) + Csum) + sigma2_ul * np.eye(D)
        U = np.swapaxes(np.linalg.solve(Z, rho_ul * H), 1, 2)
    if not np.all(np.isfinite(U)):
        raise SolverFailure("non-finite combining vectors")
    return U


def _off_diagonal_power(G):
    """Row sums of ``|G_ij|^2`` over ``j != i`` for a stack of square matrices."""
    P = np.abs(G) ** 2
    idx = np.arange(G.shape[-1])
    P[..., idx, idx] = 0.0
    return P.sum(axis=-1)


def ul_effective_channel(U, h, hhat, rho_ul, sigma2_ul, n_ul, bits):
    """Scalar UL points ``(g, ghat, sigma2_eff)`` for every fade and UE."""
    G = np.einsum("tid,tjd->tij", U.conj(), h)  # u_i^H h_j
    g = np.einsum("tii->ti", G)
    ghat = np.einsum("tid,tid->ti", U.conj(), hhat)
    interf = rho_ul * _off_diagonal_power(G)
    noise = sigma2_ul * np.sum(np.abs(U) ** 2, axis=2)
    sig2 = interf + noise
    return ScalarChannelPoint(g, ghat, sig2, rho_ul, n_ul, log_m1_from_bits(bits))


@dataclass(frozen=True)
class HardeningStats:
    mean_norm2: np.ndarray  # (K,) E[||u_i||^2]
    mean_norm2_se: np.ndarray
    ghat_dl: np.ndarray  # (K,) E[h_i^H wbar_i]
    ghat_dl_se: np.ndarray
    n_stat: int


def hardening_moments(U, h, per_realization_norm=False):
    """Sample means behind the duality normalization and the DL decoder's ``ghat``."""
    N = U.shape[0]
    norm2 = np.sum(np.abs(U) ** 2, axis=2)  # (N, K)
    mean_norm2 = norm2.mean(axis=0)
    if per_realization_norm:
        with np.errstate(invalid="ignore", divide="ignore"):
            gd = np.einsum("tid,tid->ti", h.conj(), U) / np.sqrt(norm2)
        gd = np.nan_to_num(gd)
    else:
        gd = np.einsum("tid,tid->ti", h.conj(), U) / np.sqrt(mean_norm2)
    return HardeningStats(
        mean_norm2=mean_norm2,
        mean_norm2_se=norm2.std(axis=0, ddof=1) / np.sqrt(N),
        ghat_dl=gd.mean(axis=0),
        ghat_dl_se=np.sqrt((np.var(gd.real, axis=0, ddof=1) + np.var(gd.imag, axis=0, ddof=1)) / N),
        n_stat=N,
    )


def hardening_stats(model, cfg, rng, n_stat):
    """Statistics pass over ``n_stat`` fades independent of the evaluation pass."""
    if n_stat < 50:
        raise ValueError("n_stat must be >= 50 for a usable normalization")
    U_all, h_all = [], []
    for start in range(0, n_stat, cfg.fade_chunk):
        m = min(cfg.fade_chunk, n_stat - start)
        h, hhat = model.draw(m, rng)
        U_all.append(compute_combiners(hhat, model.C, cfg.rho_ul, cfg.sigma2_ul, cfg.scheme, cfg.mode, model.best_ap))
        h_all.append(h)
    return hardening_moments(np.concatenate(U_all), np.concatenate(h_all), cfg.per_realization_norm)


def compute_precoders(U, stats, per_realization_norm=False):
    """Duality precoders ``wbar_i = u_i / sqrt(E||u_i||^2)``, shape ``(N, K, D)``."""
    if per_realization_norm:
        nrm = np.sqrt(np.sum(np.abs(U) ** 2, axis=2, keepdims=True))
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.nan_to_num(U / nrm)
    if np.any(stats.mean_norm2 <= 0):
        raise SolverFailure("nonpositive E[||u||^2] in the duality normalization")
    return U / np.sqrt(stats.mean_norm2)[None, :, None]


def dl_effective_channel(h, Wbar, ghat_dl, rho_dl, sigma2_dl, n_dl, bits):
    """Scalar DL points; the decoder uses the fading-independent ``ghat_dl``."""
    G = np.einsum("tid,tjd->tij", h.conj(), Wbar)  # h_i^H wbar_j
    g = np.einsum("tii->ti", G)
    interf = rho_dl * _off_diagonal_power(G)
    sig2 = interf + sigma2_dl
    ghat = np.broadcast_to(np.asarray(ghat_dl)[None, :], g.shape)
    return ScalarChannelPoint(g, ghat, sig2, rho_dl, n_dl, log_m1_from_bits(bits))
