"""Large-scale fading, local-scattering correlation and Rayleigh channel draws."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PSD_FLOOR = 1e-10
PSD_HARD_FLOOR = 1e-8


class CorruptCorrelation(ValueError):
    """Correlation matrix with a clearly negative eigenvalue."""


def pathloss_db(d):
    """Channel gain in dB at 3-D distance ``d`` meters."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = -30.5 - 37.6 * np.log10(d)
    return out if out.ndim else float(out)


def _gauss_legendre(delta, nodes):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return delta * x, delta * w


def local_scattering_corr(beta, phi, delta, M, nodes=200):
    """Spatial correlation of a half-wavelength ULA under local scattering.

    ``[R]_{m1,m2} = beta/(2 delta) * int_{-delta}^{delta} exp(j pi (m1-m2) sin(phi + x)) dx``
    evaluated with Gauss-Legendre quadrature.  The matrix is Hermitian
    Toeplitz, so only its first column is integrated.  ``beta`` and ``phi``
    may be arrays of equal shape; the result then has shape
    ``beta.shape + (M, M)``.  The node count is raised to ``2 M`` for long
    arrays, where the integrand oscillates faster.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if M < 1:
        raise ValueError("M must be >= 1")
    beta = np.asarray(beta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    x, w = _gauss_legendre(delta, max(nodes, 2 * M))
    k = np.arange(M)
    phase = np.pi * k[:, None] * np.sin(phi[..., None, None] + x)  # (..., M, Q)
    col = np.exp(1j * phase) @ w / (2.0 * delta)  # (..., M)
    col = col * beta[..., None]
    col[..., 0] = beta  # zero lag integrates to beta exactly
    lag = k[:, None] - k[None, :]
    R = np.where(lag >= 0, col[..., np.abs(lag)], np.conj(col[..., np.abs(lag)]))
    return R


@dataclass(frozen=True)
class CorrelationSet:
    """Correlation matrices for every (UE, AP) pair of one placement."""

    R: np.ndarray  # (K, n_aps, Ma, Ma)
    beta: np.ndarray  # (K, n_aps), linear gain

    @property
    def K(self):
        return self.R.shape[0]

    @property
    def n_aps(self):
        return self.R.shape[1]

    @property
    def antennas_per_ap(self):
        return self.R.shape[2]


def build_correlations(geom, config):
    """Correlation matrices for a placement.

    With ``config.angle_per_pair`` every AP sees the UE at its own azimuth;
    otherwise each UE keeps a single nominal angle, the one towards its
    strongest AP.
    """
    beta = 10.0 ** (pathloss_db(geom.d) / 10.0)
    phi = geom.phi
    if not config.angle_per_pair:
        best = np.argmax(beta, axis=1)
        phi = np.repeat(phi[np.arange(phi.shape[0]), best][:, None], phi.shape[1], axis=1)
    R = local_scattering_corr(beta, phi, config.delta, config.antennas_per_ap, config.quad_nodes)
    return CorrelationSet(R=R, beta=beta)


def correlation_factors(R, beta=None):
    """Square-root factors ``F`` with ``F F^H = R`` (eigenvalues below 0 clipped).

    Raises :class:`CorruptCorrelation` if an eigenvalue is below
    ``-1e-8 * beta``.
    """
    R = np.asarray(R)
    if beta is None:
        beta = np.real(np.trace(R, axis1=-2, axis2=-1)) / R.shape[-1]
    ev, V = np.linalg.eigh(R)
    if np.any(ev < -PSD_HARD_FLOOR * np.asarray(beta)[..., None]):
        raise CorruptCorrelation("correlation matrix has a negative eigenvalue below the PSD floor")
    ev = np.clip(ev, 0.0, None)
    return V * np.sqrt(ev)[..., None, :]


def complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channels(factors, n_fades, rng):
    """Draw ``n_fades`` independent channels; returns ``(N, K, n_aps, Ma)``."""
    K, A, Ma, _ = factors.shape
    w = complex_normal(rng, (n_fades, K, A, Ma))
    return np.einsum("kamn,tkan->tkam", factors, w)


def sample_collective_channel(corrs, rng, n_fades=1):
    """Collective channels ``h_i`` stacked over APs: shape ``(N, K, n_aps * Ma)``."""
    F = correlation_factors(corrs.R, corrs.beta)
    h = sample_channels(F, n_fades, rng)
    return h.reshape(n_fades, corrs.K, -1)
