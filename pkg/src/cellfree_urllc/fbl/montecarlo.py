"""Monte Carlo evaluation of the RCUs bound and of the SNN decoder itself.

The bound is estimated through the identity

    E_u[ 1{S <= log((m-1)/u)} ] = E[ min(1, (m-1) exp(-S)) ]

with symbols drawn from the exponentially tilted Gaussian law.  The
information density is evaluated with the direct formula, never through the
eigen-decomposition used by the saddlepoint code.
"""
from __future__ import annotations

import logging

import numpy as np

from .approx import EpsilonEstimate
from .density import gen_info_density, quadratic_form

log = logging.getLogger(__name__)

_MAX_SYMBOLS_PER_CHUNK = 2_000_000


def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _scalar(x):
    return np.asarray(x).item()


def epsilon_rcus_mc(point, s, N=100_000, zeta=0.0, rng=None):
    """Importance-sampled estimate of ``E[min(1, (m-1) exp(-S))]`` for one point.

    Each symbol pair ``w = (q, z)`` is drawn from ``CN(0, (Sigma^-1 + zeta A)^-1)``,
    which is the law of ``w`` tilted by ``exp(-zeta i_s)``.  The codeword
    weight is ``exp(n kappa(zeta) + zeta S)``.

    Parameters
    ----------
    point : ScalarChannelPoint
        Scalar-valued point.
    s : float
        Decoding-metric parameter, ``s > 0``.
    N : int
        Number of sampled codewords (at least 1000).
    zeta : float
        Tilt; 0 gives plain Monte Carlo.
    rng : numpy.random.Generator

    Returns
    -------
    EpsilonEstimate
        With ``stderr`` set and ``flags['low_ess']`` when the effective sample
        size of the weighted contributions is below ``0.01 N``.
    """
    if N < 1000:
        raise ValueError("N must be at least 1000")
    rng = np.random.default_rng() if rng is None else rng
    n = int(_scalar(point.n))
    t = float(_scalar(point.log_m1))
    rho = float(_scalar(point.rho))
    sig2 = float(_scalar(point.sigma2_eff))
    g = complex(_scalar(point.g))
    if np.isneginf(t):
        return EpsilonEstimate(0.0, -np.inf, "mc_is", s, zeta, 0.0, {"low_ess": False})

    A, d = quadratic_form(s, point)
    A = np.asarray(A).reshape(2, 2)
    d = float(_scalar(d))
    sigma = np.diag([rho, sig2]).astype(complex)
    prec = np.linalg.inv(sigma) if rho > 0 else None
    if zeta != 0.0:
        if prec is None:
            raise ValueError("tilting requires rho > 0")
        tilted_prec = prec + zeta * A
        if np.any(np.linalg.eigvalsh(tilted_prec) <= 0):
            raise ValueError("tilt outside the CGF domain")
        cov = np.linalg.inv(tilted_prec)
        cov = 0.5 * (cov + cov.conj().T)
        # kappa(zeta) = -zeta d - log det(I + zeta Sigma A)
        _, logdet = np.linalg.slogdet(np.eye(2) + zeta * sigma @ A)
        kappa = -zeta * d - logdet
    else:
        cov = sigma
        kappa = 0.0
    chol = np.linalg.cholesky(cov + 1e-300 * np.eye(2)) if rho > 0 else np.sqrt(sigma.real)

    chunk = max(1, _MAX_SYMBOLS_PER_CHUNK // n)
    logc = np.empty(N)
    for start in range(0, N, chunk):
        m = min(chunk, N - start)
        e = _complex_normal(rng, (m, n, 2))
        w = e @ chol.T
        q, z = w[..., 0], w[..., 1]
        v = g * q + z
        S = gen_info_density(s, point, q, v).sum(axis=1)
        logc[start:start + m] = np.minimum(0.0, t - S) + n * kappa + zeta * S

    top = np.max(logc)
    c = np.exp(logc - top)
    mean = c.mean()
    sd = c.std(ddof=1) / np.sqrt(N)
    ess = c.sum() ** 2 / np.sum(c**2)
    value = mean * np.exp(top)
    flags = {"low_ess": bool(ess < 0.01 * N), "ess": float(ess)}
    if flags["low_ess"]:
        log.warning("importance sampler effective sample size %.0f of %d", ess, N)
    return EpsilonEstimate(
        value=float(value),
        log_value=float(np.log(mean) + top),
        method="mc_is",
        s_used=s,
        zeta_used=zeta,
        stderr=float(sd * np.exp(top)),
        flags=flags,
    )


def mc_cgf(zeta, s, point, N, rng):
    """Empirical ``log mean exp(-zeta i_s)`` with its delta-method standard error."""
    rho = float(_scalar(point.rho))
    sig2 = float(_scalar(point.sigma2_eff))
    q = np.sqrt(rho) * _complex_normal(rng, N)
    z = np.sqrt(sig2) * _complex_normal(rng, N)
    v = complex(_scalar(point.g)) * q + z
    x = np.exp(-zeta * gen_info_density(s, point, q, v))
    m = x.mean()
    return float(np.log(m)), float(x.std(ddof=1) / np.sqrt(N) / m)


def snn_error_rate(sample_channel, n, bits, rho, sigma2, trials, rng, batch=2000):
    """Error rate of the scaled nearest-neighbour decoder over random Gaussian codebooks.

    Every trial draws ``(g, ghat) = sample_channel(rng)``, a fresh codebook of
    ``2**bits`` codewords with i.i.d. ``CN(0, rho)`` entries, sends codeword 0
    over ``v = g q + z`` and decodes by exhaustive search of
    ``||v - ghat q'||^2``.  Ties count as errors.

    Returns ``(error_rate, standard_error)``.
    """
    m = 2**bits
    errors = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        g, ghat = sample_channel(rng, b)
        g = np.asarray(g, dtype=complex).reshape(b, 1)
        ghat = np.asarray(ghat, dtype=complex).reshape(b, 1, 1)
        book = np.sqrt(rho) * _complex_normal(rng, (b, m, n))
        z = np.sqrt(sigma2) * _complex_normal(rng, (b, n))
        v = g * book[:, 0, :] + z
        metric = np.sum(np.abs(v[:, None, :] - ghat * book) ** 2, axis=2)
        best_other = metric[:, 1:].min(axis=1)
        errors += int(np.sum(best_other <= metric[:, 0]))
        done += b
    p = errors / trials
    return p, float(np.sqrt(max(p * (1 - p), 1.0 / trials) / trials))
