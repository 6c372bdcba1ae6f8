"""Generalized information density and its cumulant generating function.

For the scalar channel ``v = g q + z`` with ``q ~ CN(0, rho)`` and
``z ~ CN(0, sigma2)``, the per-symbol generalized information density of the
scaled nearest-neighbour decoder is a Hermitian quadratic form in
``w = (q, z)`` plus a constant::

    i_s(q, v) = w^H A w + d

so its CGF is available in closed form through the two eigenvalues of
``Sigma A`` with ``Sigma = diag(rho, sigma2)``.  Everything here is
vectorized: every field of :class:`ScalarChannelPoint` may be an array and
the usual numpy broadcasting rules apply.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class CgfDomainError(ValueError):
    """Raised when the CGF is requested outside its domain of finiteness."""


@dataclass(frozen=True)
class ScalarChannelPoint:
    """Reduced channel ``v[k] = g q[k] + z[k]`` seen by one decoder.

    Attributes
    ----------
    g : complex
        True effective channel.
    ghat : complex
        Channel value the decoder treats as exact.
    sigma2_eff : float
        Variance of ``z`` (noise plus residual interference), linear scale.
    rho : float
        Power of the codeword symbols ``q``.
    n : int
        Blocklength in channel uses.
    log_m1 : float
        ``log(m - 1)`` in nats; ``-inf`` for a single-codeword code.
    """

    g: complex | np.ndarray
    ghat: complex | np.ndarray
    sigma2_eff: float | np.ndarray
    rho: float | np.ndarray
    n: int | np.ndarray
    log_m1: float | np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.sigma2_eff) <= 0):
            raise ValueError("sigma2_eff must be positive")
        if np.any(np.asarray(self.rho) < 0):
            raise ValueError("rho must be nonnegative")
        if np.any(np.asarray(self.n) < 1):
            raise ValueError("blocklength n must be >= 1")

    @classmethod
    def from_payload(cls, g, ghat, sigma2_eff, rho, n, bits):
        """Build a point for a code carrying ``bits`` information bits."""
        return cls(g, ghat, sigma2_eff, rho, n, log_m1_from_bits(bits))

    @property
    def rate(self):
        """Rate ``log(m - 1) / n`` in nats per channel use."""
        return np.asarray(self.log_m1, dtype=float) / np.asarray(self.n, dtype=float)

    def scaled(self, c):
        """Point seen after multiplying the observation by the complex scalar ``c``."""
        return ScalarChannelPoint(
            c * np.asarray(self.g),
            c * np.asarray(self.ghat),
            np.abs(c) ** 2 * np.asarray(self.sigma2_eff),
            self.rho,
            self.n,
            self.log_m1,
        )

    def __getitem__(self, idx):
        def pick(x):
            x = np.asarray(x)
            return x if x.ndim == 0 else x[idx]

        g, ghat, s2, rho, n, lm = np.broadcast_arrays(
            *(np.asarray(v) for v in (self.g, self.ghat, self.sigma2_eff, self.rho, self.n, self.log_m1))
        )
        return ScalarChannelPoint(pick(g), pick(ghat), pick(s2), pick(rho), pick(n), pick(lm))


def log_m1_from_bits(bits):
    """``log(2**bits - 1)`` without overflow; ``-inf`` when ``bits == 0``."""
    bits = np.asarray(bits, dtype=float)
    with np.errstate(divide="ignore"):
        # log(2^b - 1) = b log 2 + log1p(-2^-b)
        out = bits * np.log(2.0) + np.log1p(-np.exp2(-bits))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class QuadDecomposition:
    """Eigen form of ``i_s``: ``lambda1 >= lambda2`` of ``Sigma A`` and offset ``d``.

    ``domain_min < 0 < domain_max`` bound the open interval of ``zeta`` on
    which ``1 + zeta * lambda_j > 0`` for both eigenvalues.
    """

    lambda1: np.ndarray
    lambda2: np.ndarray
    d: np.ndarray
    s: np.ndarray

    @property
    def domain_max(self):
        with np.errstate(divide="ignore"):
            return np.where(self.lambda2 < 0, -1.0 / np.minimum(self.lambda2, -1e-300), np.inf)

    @property
    def domain_min(self):
        with np.errstate(divide="ignore"):
            return np.where(self.lambda1 > 0, -1.0 / np.maximum(self.lambda1, 1e-300), -np.inf)

    @property
    def mean(self):
        """``E[i_s]`` in nats."""
        return self.d + self.lambda1 + self.lambda2

    @property
    def variance(self):
        """``Var[i_s]`` in nats squared."""
        return self.lambda1**2 + self.lambda2**2

    def __getitem__(self, idx):
        l1, l2, d, s = np.broadcast_arrays(self.lambda1, self.lambda2, self.d, self.s)
        return QuadDecomposition(l1[idx], l2[idx], d[idx], s[idx])


@dataclass(frozen=True)
class CgfTriple:
    kappa: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray


def gen_info_density(s, point, q, v):
    """Generalized information density ``i_s(q, v)`` in nats (direct formula)."""
    ghat = np.asarray(point.ghat)
    snr_hat = s * np.asarray(point.rho) * np.abs(ghat) ** 2
    return (
        -s * np.abs(v - ghat * q) ** 2
        + s * np.abs(v) ** 2 / (1.0 + snr_hat)
        + np.log1p(snr_hat)
    )


def quadratic_form(s, point):
    """Return ``(A, d)`` with ``i_s = w^H A w + d`` for ``w = (q, z)``.

    ``A`` has shape ``broadcast_shape + (2, 2)``.
    """
    g = np.asarray(point.g, dtype=complex)
    ghat = np.asarray(point.ghat, dtype=complex)
    s = np.asarray(s, dtype=float)
    rho = np.asarray(point.rho, dtype=float)
    g, ghat, s, rho = np.broadcast_arrays(g, ghat, s, rho)
    a = s / (1.0 + s * rho * np.abs(ghat) ** 2)
    c1 = np.stack([g - ghat, np.ones_like(g)], axis=-1)
    c2 = np.stack([g, np.ones_like(g)], axis=-1)
    outer = lambda c: np.conj(c)[..., :, None] * c[..., None, :]
    A = -s[..., None, None] * outer(c1) + a[..., None, None] * outer(c2)
    d = np.log1p(s * rho * np.abs(ghat) ** 2)
    return A, d


def quad_decomposition(s, point):
    """Eigenvalues of ``Sigma A`` and the offset ``d``, computed in closed form.

    Uses ``det A = -s a |ghat|^2`` (the two rank-one terms share the vector
    ``(0, 1)`` up to ``ghat``) and a cancellation-free trace, so the result
    stays accurate when ``ghat`` is tiny or ``s rho |ghat|^2`` is huge.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("s must be positive")
    g = np.asarray(point.g, dtype=complex)
    ghat = np.asarray(point.ghat, dtype=complex)
    rho = np.asarray(point.rho, dtype=float)
    sig2 = np.asarray(point.sigma2_eff, dtype=float)

    x = s * rho * np.abs(ghat) ** 2
    a = s / (1.0 + x)
    tr = rho * (a * np.abs(g) ** 2 - s * np.abs(g - ghat) ** 2) - sig2 * s * x / (1.0 + x)
    det = -rho * sig2 * s * a * np.abs(ghat) ** 2
    disc = np.sqrt(np.maximum(tr**2 - 4.0 * det, 0.0))
    big = 0.5 * (tr + np.where(tr >= 0, disc, -disc))
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.where(big != 0, det / big, 0.0)
    lam1 = np.maximum(big, small)
    lam2 = np.minimum(big, small)
    d = np.log1p(x)
    lam1, lam2, d, s = np.broadcast_arrays(lam1, lam2, d, s)
    return QuadDecomposition(lam1, lam2, d, s)


def in_domain(zeta, decomp):
    zeta = np.asarray(zeta, dtype=float)
    return (zeta > decomp.domain_min) & (zeta < decomp.domain_max)


def cgf(zeta, decomp, check=True):
    """Per-symbol CGF ``kappa(zeta) = log E[exp(-zeta i_s)]`` and two derivatives.

    Raises :class:`CgfDomainError` if ``zeta`` is outside the open domain and
    ``check`` is set.
    """
    zeta = np.asarray(zeta, dtype=float)
    if check and not np.all(in_domain(zeta, decomp)):
        raise CgfDomainError("zeta outside the CGF domain")
    l1, l2, d = decomp.lambda1, decomp.lambda2, decomp.d
    t1 = 1.0 + zeta * l1
    t2 = 1.0 + zeta * l2
    kappa = -zeta * d - np.log(t1) - np.log(t2)
    kappa1 = -d - l1 / t1 - l2 / t2
    kappa2 = (l1 / t1) ** 2 + (l2 / t2) ** 2
    return CgfTriple(kappa, kappa1, kappa2)
