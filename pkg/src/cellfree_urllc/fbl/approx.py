"""Saddlepoint and normal approximations of the RCUs error probability.

With ``S = sum_k i_s(q[k], v[k])`` and ``t = log(m - 1)`` the conditional
bound is ``eps = E[min(1, exp(t - S))]``.  Tilting ``-S`` by ``zeta`` moves its
mean onto ``-t`` when ``kappa'(zeta) = -R``; a Gaussian approximation of the
tilted sum then gives two closed-form terms, one for ``P[S <= t]`` and one
for ``E[exp(t - S); S > t]``.  For tilts beyond 1 the second term is written
as ``E[exp(t - S)] - E[exp(t - S); S <= t]`` whose first part is exact; for
negative tilts (rates above the mean density) the first term is written as
``1 - P[S > t]``.  In both cases the Gaussian step only touches the small
quantity.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, erfcx, ndtr

from .density import cgf, in_domain, quad_decomposition

log = logging.getLogger(__name__)

_SQRT2 = np.sqrt(2.0)


class ExponentUnreachable(RuntimeError):
    """The saddlepoint equation has no root inside the CGF domain."""


@dataclass
class EpsilonEstimate:
    """Error-probability estimate; fields may be arrays for vectorized calls."""

    value: np.ndarray
    log_value: np.ndarray
    method: str
    s_used: np.ndarray
    zeta_used: np.ndarray | None = None
    stderr: np.ndarray | None = None
    flags: dict = field(default_factory=dict)


def solve_saddlepoint(n, R, decomp, clip_at_zero=True):
    """Root ``zeta*`` of ``kappa'(zeta) = -R``.

    ``kappa'`` is strictly increasing, and clearing denominators turns the
    equation into a quadratic in ``zeta``; its root inside the domain is
    polished with safeguarded Newton steps.  With ``clip_at_zero`` rates at or
    above the mean density return 0.  Elements with no root inside the domain
    are returned as NaN, except that a scalar call raises
    :class:`ExponentUnreachable`.  The root does not depend on ``n``.
    """
    zeta = _saddle_root(R, decomp, clip_at_zero)
    if zeta.ndim == 0:
        if not np.isfinite(zeta):
            raise ExponentUnreachable("kappa' = -R has no root in the CGF domain")
        return float(zeta)
    return zeta


def _saddle_root(R, decomp, clip_at_zero):
    R = np.asarray(R, dtype=float)
    l1, l2, d = np.broadcast_arrays(decomp.lambda1, decomp.lambda2, decomp.d)
    R, l1, l2, d = np.broadcast_arrays(R, l1, l2, d)
    lo = np.broadcast_to(decomp.domain_min, R.shape)
    hi = np.broadcast_to(decomp.domain_max, R.shape)

    a = R - d
    c2 = a * l1 * l2
    c1 = a * (l1 + l2) - 2.0 * l1 * l2
    c0 = a - l1 - l2
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = np.sqrt(np.maximum(c1**2 - 4.0 * c2 * c0, 0.0))
        qq = -0.5 * (c1 + np.where(c1 >= 0, disc, -disc))
        r_a = np.where(qq != 0, c0 / qq, np.nan)
        r_b = np.where(c2 != 0, qq / c2, np.where(c1 != 0, -c0 / c1, np.nan))
    ok_a = np.isfinite(r_a) & (r_a > lo) & (r_a < hi)
    ok_b = np.isfinite(r_b) & (r_b > lo) & (r_b < hi)
    zeta = np.where(ok_a, r_a, np.where(ok_b, r_b, np.nan))

    for _ in range(3):
        good = np.isfinite(zeta)
        z = np.where(good, zeta, 0.0)
        t1, t2 = 1.0 + z * l1, 1.0 + z * l2
        k1 = -d - l1 / t1 - l2 / t2
        k2 = (l1 / t1) ** 2 + (l2 / t2) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(k2 > 0, (k1 + R) / k2, 0.0)
        cand = z - step
        inside = (cand > lo) & (cand < hi)
        zeta = np.where(good & inside, cand, zeta)

    if clip_at_zero:
        zeta = np.where(-d - l1 - l2 >= -R, 0.0, zeta)
    return zeta


def _log_psi(a, sd):
    """``log( exp(a^2 sd^2 / 2) Q(a sd) )`` for any real ``a``."""
    y = a * sd / _SQRT2
    ay = np.abs(y)
    pos = np.log(0.5 * erfcx(ay))
    neg = y**2 + np.log(0.5 * (1.0 + erf(ay)))
    return np.where(y >= 0, pos, neg)


def _log_diff(la, lb):
    """``log(exp(la) - exp(lb))`` for ``la >= lb``; ``-inf`` otherwise."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.exp(np.minimum(lb - la, 0.0))
        out = la + np.log1p(-r)
    return np.where(lb < la, out, -np.inf)


def _log_eps_sp(n, t, decomp):
    """Vectorized log of the saddlepoint approximation; NaN where unreachable."""
    n = np.asarray(n, dtype=float)
    t = np.asarray(t, dtype=float)
    # m = 1 is handled at the end; a finite stand-in keeps the algebra quiet
    R = np.where(np.isneginf(t), 0.0, t) / n
    zeta = _saddle_root(R, decomp, clip_at_zero=False)
    z = np.where(np.isfinite(zeta), zeta, 0.0)
    c = cgf(z, decomp, check=False)
    sd = np.sqrt(n * c.kappa2)
    base = n * (c.kappa + z * R)

    # tilt in [.., 1]: both terms tilted at zeta*
    mid = base + np.logaddexp(_log_psi(z, sd), _log_psi(1.0 - z, sd))

    # tilt beyond 1: E[e^{t-S}] exactly, minus the part on {S <= t}
    one_ok = in_domain(1.0, decomp)
    c_one = cgf(np.where(one_ok, 1.0, 0.0), decomp, check=False)
    exact = n * (c_one.kappa + R)
    corr = base + _log_diff(_log_psi(z - 1.0, sd), _log_psi(z, sd))
    high = _log_diff(exact, corr)
    high = np.where(np.isfinite(high), high, exact)

    # negative tilt (rate above the mean): approximate the small tail P[S > t]
    tail = base + _log_diff(_log_psi(-z, sd), _log_psi(1.0 - z, sd))
    with np.errstate(over="ignore", divide="ignore"):
        low = np.log1p(-np.minimum(np.exp(tail), 1.0))

    out = np.where(z <= 1.0, mid, high)
    out = np.where(z < 0.0, low, out)
    out = np.where(np.isfinite(zeta), out, np.nan)

    # constant density (e.g. ghat = 0 or rho = 0): S = n d exactly
    const = (decomp.lambda1 == 0) & (decomp.lambda2 == 0)
    out = np.where(const, t - n * decomp.d, out)
    out = np.where(np.isneginf(t), -np.inf, out)
    return np.minimum(out, 0.0), zeta


def epsilon_saddlepoint(point, s, rng=None, mc_samples=100_000):
    """Saddlepoint approximation of the conditional RCUs bound at parameter ``s``.

    Vectorized over the fields of ``point`` and ``s``.  Points whose
    saddlepoint equation has no root in the CGF domain are evaluated with the
    importance-sampling oracle (requires ``rng``); they are listed in
    ``flags['mc_fallback']``.
    """
    decomp = quad_decomposition(s, point)
    n = np.asarray(point.n, dtype=float)
    t = np.asarray(point.log_m1, dtype=float)
    logv, zeta = _log_eps_sp(n, t, decomp)
    logv = np.array(logv, dtype=float)
    flags = {}
    bad = np.isnan(logv)
    if np.any(bad):
        from .montecarlo import epsilon_rcus_mc

        if rng is None:
            raise ExponentUnreachable("saddlepoint unreachable and no rng for the MC fallback")
        shape = logv.shape
        s_arr = np.broadcast_to(np.asarray(s, dtype=float), shape)
        for k in zip(*np.nonzero(bad)) if shape else [()]:
            dk = decomp[k] if shape else decomp
            tilt = float(min(1.0, 0.5 * float(dk.domain_max)))
            est = epsilon_rcus_mc(point[k] if shape else point, float(s_arr[k]), mc_samples, tilt, rng)
            logv[k] = est.log_value
        flags["mc_fallback"] = bad
        log.debug("saddlepoint MC fallback for %d point(s)", int(np.sum(bad)))
    value = np.exp(logv)
    return EpsilonEstimate(
        value=value if value.ndim else float(value),
        log_value=logv if logv.ndim else float(logv),
        method="saddlepoint",
        s_used=s,
        zeta_used=zeta,
        flags=flags,
    )


def epsilon_normal(point, s):
    """Normal approximation ``Q((n I - log(m-1)) / sqrt(n V))``."""
    decomp = quad_decomposition(s, point)
    n = np.asarray(point.n, dtype=float)
    t = np.asarray(point.log_m1, dtype=float)
    mean, var = decomp.mean, decomp.variance
    gap = n * mean - t
    with np.errstate(divide="ignore", invalid="ignore"):
        z = gap / np.sqrt(n * var)
    val = np.where(var > 0, ndtr(-z), np.where(gap > 0, 0.0, np.where(gap < 0, 1.0, 0.5)))
    with np.errstate(divide="ignore"):
        logv = np.log(val)
    return EpsilonEstimate(
        value=val if val.ndim else float(val),
        log_value=logv if logv.ndim else float(logv),
        method="normal",
        s_used=s,
    )


def _golden_min(f, lo, hi, iters):
    """Vectorized golden-section search of ``f`` on per-element brackets."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo.copy(), hi.copy()
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        left = f1 <= f2
        a = np.where(left, a, x1)
        b = np.where(left, x2, b)
        x_new = np.where(left, b - invphi * (b - a), a + invphi * (b - a))
        f_new = f(x_new)
        x1, x2 = np.where(left, x_new, x2), np.where(left, x1, x_new)
        f1, f2 = np.where(left, f_new, f2), np.where(left, f1, f_new)
    x = np.where(f1 <= f2, x1, x2)
    return x, np.minimum(f1, f2)


GRID_EXPONENTS = np.arange(-6, 7)
MAX_EXTEND = 40
WIDE_EXPONENTS = np.arange(-40.0, 40.5, 1.5)


def s_reference(point):
    """Noise plus mismatch power ``sigma2_eff + rho |g - ghat|^2``."""
    g = np.asarray(point.g, dtype=complex)
    ghat = np.asarray(point.ghat, dtype=complex)
    return np.asarray(point.sigma2_eff, dtype=float) + np.asarray(point.rho, dtype=float) * np.abs(g - ghat) ** 2


def optimize_s(point, iters=20):
    """Minimize the saddlepoint approximation over ``s`` for every point.

    A log2 grid ``s = 2^j / noise`` (``j = -6..6``) locates the basin;
    golden-section refinement on ``[j* - 1, j* + 1]`` finishes it; a minimum
    on the grid edge extends the scan outward one octave at a time.  The
    reference ``noise = sigma2_eff + rho |g - ghat|^2`` is what the decoder's
    metric effectively sees, so the grid follows the optimum when the channel
    mismatch dominates.  Returns ``(s_star, EpsilonEstimate)``.
    """
    sig2 = s_reference(point)
    n = np.asarray(point.n, dtype=float)
    t = np.asarray(point.log_m1, dtype=float)
    shape = np.broadcast_shapes(
        np.shape(point.g), np.shape(point.ghat), sig2.shape, np.shape(point.rho), n.shape, t.shape
    )
    sig2_b = np.broadcast_to(sig2, shape)

    def logeps(j):
        ref = sig2_b[..., None] if j.ndim > len(shape) else sig2_b
        return _logeps_at(_expand(point, j.ndim > len(shape)), j, ref)

    grid = np.broadcast_to(GRID_EXPONENTS.astype(float), shape + (GRID_EXPONENTS.size,))
    vals = logeps(grid)
    k = np.argmin(vals, axis=-1)
    j_best = np.array(GRID_EXPONENTS[k], dtype=float)
    v_best = np.array(np.take_along_axis(vals, k[..., None], axis=-1)[..., 0])

    # whole grid on the eps = 1 plateau: coarse wide scan for those points only
    flat = np.all(vals >= 0.0, axis=-1)
    if np.any(flat):
        sub = _subset(point, flat, shape)
        wide = np.broadcast_to(WIDE_EXPONENTS, sub.g.shape + WIDE_EXPONENTS.shape)
        wvals = _logeps_at(_expand(sub, True), wide, sig2_b[flat][..., None])
        kw = np.argmin(wvals, axis=-1)
        wv = np.take_along_axis(wvals, kw[..., None], axis=-1)[..., 0]
        fb, fv = j_best[flat], v_best[flat]
        j_best[flat] = np.where(wv < fv, WIDE_EXPONENTS[kw], fb)
        v_best[flat] = np.minimum(wv, fv)

    # minimum on a grid edge and still falling: keep stepping outward
    last = GRID_EXPONENTS.size - 1
    step = np.where((k == 0) & (vals[..., 0] < vals[..., 1]), -1.0, 0.0)
    step = np.where((k == last) & (vals[..., last] < vals[..., last - 1]), 1.0, step)
    for _ in range(MAX_EXTEND):
        if not np.any(step):
            break
        j_try = j_best + step
        v_try = logeps(j_try)
        better = (step != 0) & (v_try < v_best)
        j_best = np.where(better, j_try, j_best)
        v_best = np.where(better, v_try, v_best)
        step = np.where(better, step, 0.0)

    x, fx = _golden_min(logeps, j_best - 1.0, j_best + 1.0, iters)
    use = fx < v_best
    j_star = np.where(use, x, j_best)
    s_star = np.exp2(j_star) / sig2_b
    est = epsilon_saddlepoint(point, s_star if s_star.ndim else float(s_star))
    return (s_star if s_star.ndim else float(s_star)), est


def _logeps_at(point, j, ref):
    dec = quad_decomposition(np.exp2(j) / ref, point)
    lv, _ = _log_eps_sp(np.asarray(point.n, dtype=float), np.asarray(point.log_m1, dtype=float), dec)
    return np.where(np.isnan(lv), 0.0, lv)


def _subset(point, mask, shape):
    from .density import ScalarChannelPoint

    pick = lambda x: np.broadcast_to(np.asarray(x), shape)[mask]
    return ScalarChannelPoint(
        pick(point.g), pick(point.ghat), pick(point.sigma2_eff), pick(point.rho), pick(point.n), pick(point.log_m1)
    )


def _bx(x, expand):
    x = np.asarray(x)
    return x[..., None] if expand else x


def _expand(point, expand):
    if not expand:
        return point
    from .density import ScalarChannelPoint

    return ScalarChannelPoint(
        _bx(point.g, True), _bx(point.ghat, True), _bx(point.sigma2_eff, True),
        _bx(point.rho, True), _bx(point.n, True), _bx(point.log_m1, True),
    )
