import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellfree_urllc.channel import build_correlations
from cellfree_urllc.config import desk_config
from cellfree_urllc.estimation import PilotConfig
from cellfree_urllc.geometry import build_deployment, pairwise_geometry
from cellfree_urllc.processing import (
    HardeningStats,
    LinkModel,
    compute_combiners,
    compute_precoders,
    dl_effective_channel,
    hardening_moments,
    hardening_stats,
    ul_effective_channel,
)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _model(L=16, scheme="mr", seed=0, **kw):
    cfg = desk_config(L=L, scheme=scheme, **kw)
    dep = build_deployment(cfg, np.random.default_rng(seed))
    corrs = build_correlations(pairwise_geometry(dep, cfg.area), cfg)
    return cfg, LinkModel.build(corrs, PilotConfig.from_sim(cfg))


def test_two_ue_mmse_fixture():
    # hhat_1 = (1, 0), hhat_2 = (1, 1)/sqrt2, no estimation error, rho = sigma2 = 1
    hhat = np.array([[[1.0, 0.0], [1 / np.sqrt(2), 1 / np.sqrt(2)]]], dtype=complex)
    C = np.zeros((2, 2, 1, 1), dtype=complex)  # two single-antenna APs
    U = compute_combiners(hhat, C, 1.0, 1.0, "mmse", "cellfree")
    # (H H^H + I) = [[2.5, 0.5], [0.5, 1.5]]  ->  u_1 = (3/7, -1/7)
    np.testing.assert_allclose(U[0, 0], [3 / 7, -1 / 7], atol=1e-15)
    np.testing.assert_allclose(U[0, 1], np.linalg.solve([[2.5, 0.5], [0.5, 1.5]], hhat[0, 1]), atol=1e-15)


def test_mmse_solves_normal_equations(rng):
    N, K, A, Ma = 3, 4, 3, 2
    hhat = _cn(rng, (N, K, A * Ma))
    B = _cn(rng, (K, A, Ma, Ma))
    C = 0.1 * B @ B.conj().swapaxes(-1, -2)
    rho, s2 = 0.7, 0.3
    U = compute_combiners(hhat, C, rho, s2, "mmse", "cellfree")
    Csum = np.zeros((A * Ma, A * Ma), dtype=complex)
    for a in range(A):
        Csum[a * Ma:(a + 1) * Ma, a * Ma:(a + 1) * Ma] = C[:, a].sum(axis=0)
    for t in range(N):
        H = hhat[t].T
        Z = rho * (H @ H.conj().T + Csum) + s2 * np.eye(A * Ma)
        resid = Z @ U[t].T - rho * H
        assert np.max(np.abs(resid)) < 1e-8 * np.max(np.abs(rho * H))


def test_single_user_mmse_is_scaled_mr(rng):
    hhat = _cn(rng, (5, 1, 6))
    C = np.zeros((1, 6, 1, 1), dtype=complex)
    U = compute_combiners(hhat, C, 1.0, 0.5, "mmse", "cellfree")
    ratio = U / hhat
    np.testing.assert_allclose(ratio.imag, 0.0, atol=1e-12)
    np.testing.assert_allclose(ratio, np.broadcast_to(ratio[:, :, :1], ratio.shape), rtol=1e-12)


def test_noise_dominated_mmse_tends_to_mr(rng):
    hhat = _cn(rng, (2, 3, 4))
    C = np.zeros((3, 4, 1, 1), dtype=complex)
    s2 = 1e9
    U = compute_combiners(hhat, C, 2.0, s2, "mmse", "cellfree")
    np.testing.assert_allclose(U, (2.0 / s2) * hhat, rtol=1e-6)


def test_mr_is_estimate(rng):
    hhat = _cn(rng, (2, 3, 4))
    U = compute_combiners(hhat, np.zeros((3, 4, 1, 1)), 1.0, 1.0, "mr", "cellfree")
    np.testing.assert_array_equal(U, hhat)


@pytest.mark.parametrize("scheme", ["mr", "mmse"])
def test_smallcell_support(rng, scheme):
    N, K, A, Ma = 4, 5, 3, 2
    hhat = _cn(rng, (N, K, A * Ma))
    C = np.tile(0.01 * np.eye(Ma), (K, A, 1, 1)).astype(complex)
    best = np.array([0, 2, 2, 1, 0])
    U = compute_combiners(hhat, C, 1.0, 0.1, scheme, "smallcell", best).reshape(N, K, A, Ma)
    for i in range(K):
        for a in range(A):
            if a == best[i]:
                assert np.all(np.abs(U[:, i, a]) > 0)
            else:
                assert np.all(U[:, i, a] == 0)


def test_smallcell_mmse_local_solve(rng):
    N, K, A, Ma = 2, 3, 2, 2
    hhat = _cn(rng, (N, K, A * Ma))
    C = np.tile(0.05 * np.eye(Ma), (K, A, 1, 1)).astype(complex)
    best = np.array([1, 1, 0])
    U = compute_combiners(hhat, C, 1.0, 0.2, "mmse", "smallcell", best).reshape(N, K, A, Ma)
    Hl = hhat.reshape(N, K, A, Ma)[:, :, 1, :]
    for t in range(N):
        Z = Hl[t].T @ Hl[t].conj() + C[:, 1].sum(axis=0) + 0.2 * np.eye(Ma)
        np.testing.assert_allclose(U[t, 0, 1], np.linalg.solve(Z, Hl[t, 0]), rtol=1e-10)


def test_ul_matched_scalar_reduction(rng):
    h = _cn(rng, (6, 1, 1))
    pt = ul_effective_channel(h, h, h, 1.0, 0.3, 130, 160)
    np.testing.assert_allclose(pt.g, np.abs(h[:, :, 0]) ** 2)
    np.testing.assert_allclose(pt.ghat, np.abs(h[:, :, 0]) ** 2)
    np.testing.assert_allclose(pt.sigma2_eff, 0.3 * np.abs(h[:, :, 0]) ** 2)


def test_ul_interference_free(rng):
    N, K, D = 3, 4, 5
    U, h, hhat = _cn(rng, (N, K, D)), _cn(rng, (N, K, D)), _cn(rng, (N, K, D))
    h[:, 1:] = 0
    pt = ul_effective_channel(U, h, hhat, 1.0, 0.4, 130, 160)
    np.testing.assert_allclose(pt.sigma2_eff[:, 0], 0.4 * np.sum(np.abs(U[:, 0]) ** 2, axis=1))


def test_ul_interference_term(rng):
    N, K, D = 2, 3, 4
    U, h, hhat = _cn(rng, (N, K, D)), _cn(rng, (N, K, D)), _cn(rng, (N, K, D))
    pt = ul_effective_channel(U, h, hhat, 0.5, 0.1, 130, 160)
    for t in range(N):
        for i in range(K):
            interf = sum(abs(np.vdot(U[t, i], h[t, j])) ** 2 for j in range(K) if j != i)
            expect = 0.5 * interf + 0.1 * np.linalg.norm(U[t, i]) ** 2
            assert pt.sigma2_eff[t, i] == pytest.approx(expect, rel=1e-12)
            assert pt.g[t, i] == pytest.approx(np.vdot(U[t, i], h[t, i]), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_ul_scaling(c):
    rng = np.random.default_rng(7)
    U, h, hhat = _cn(rng, (2, 3, 4)), _cn(rng, (2, 3, 4)), _cn(rng, (2, 3, 4))
    a = ul_effective_channel(U, h, hhat, 1.0, 0.2, 130, 160)
    b = ul_effective_channel(np.conj(c) * U, h, hhat, 1.0, 0.2, 130, 160)
    np.testing.assert_allclose(b.g, c * a.g, rtol=1e-12)
    np.testing.assert_allclose(b.ghat, c * a.ghat, rtol=1e-12)
    np.testing.assert_allclose(b.sigma2_eff, abs(c) ** 2 * a.sigma2_eff, rtol=1e-12)


def test_mr_norm_moment_single_antenna(rng):
    beta = 2.5
    h = np.sqrt(beta) * _cn(rng, (200_000, 1, 1))
    st_ = hardening_moments(h, h, per_realization_norm=False)
    assert abs(st_.mean_norm2[0] - beta) < 5 * st_.mean_norm2_se[0]


def test_mr_dl_mean_is_real_positive():
    cfg, model = _model(L=9, scheme="mr")
    st_ = hardening_stats(model, cfg, np.random.default_rng(1), 400)
    assert np.all(st_.ghat_dl.real > 0)
    assert np.all(np.abs(st_.ghat_dl.imag) < 5 * st_.ghat_dl_se)


def test_stats_standard_error_scales():
    cfg, model = _model(L=9, scheme="mr", per_realization_norm=False)
    a = hardening_stats(model, cfg, np.random.default_rng(2), 1000)
    b = hardening_stats(model, cfg, np.random.default_rng(3), 4000)
    # four times the fades halves the standard error
    np.testing.assert_allclose(a.mean_norm2_se / b.mean_norm2_se, 2.0, rtol=0.25)


def test_stats_require_enough_fades():
    cfg, model = _model(L=4)
    with pytest.raises(ValueError):
        hardening_stats(model, cfg, np.random.default_rng(0), 10)


def test_per_realization_precoders_unit_norm(rng):
    U = _cn(rng, (3, 4, 5))
    W = compute_precoders(U, None, per_realization_norm=True)
    np.testing.assert_allclose(np.linalg.norm(W, axis=2), 1.0, rtol=1e-14)


def test_average_normalized_precoders():
    cfg, model = _model(L=9, scheme="mmse", per_realization_norm=False)
    st_ = hardening_stats(model, cfg, np.random.default_rng(4), 2000)
    h, hhat = model.draw(2000, np.random.default_rng(5))
    U = compute_combiners(hhat, model.C, cfg.rho_ul, cfg.sigma2_ul, cfg.scheme, cfg.mode)
    W = compute_precoders(U, st_, per_realization_norm=False)
    p = np.sum(np.abs(W) ** 2, axis=2)
    se = np.sqrt((p.std(axis=0, ddof=1) / np.sqrt(p.shape[0])) ** 2 + (st_.mean_norm2_se / st_.mean_norm2) ** 2)
    assert np.all(np.abs(p.mean(axis=0) - 1.0) < 3 * se)


@pytest.mark.parametrize("per_real", [True, False])
def test_mr_precoders_scale_invariant(rng, per_real):
    hhat = _cn(rng, (400, 2, 3))
    st1 = hardening_moments(hhat, hhat, per_real)
    st2 = hardening_moments(7.0 * hhat, hhat, per_real)
    W1 = compute_precoders(hhat, st1, per_real)
    W2 = compute_precoders(7.0 * hhat, st2, per_real)
    np.testing.assert_allclose(W1, W2, rtol=1e-12)


def test_dl_single_user_noise_only(rng):
    h = _cn(rng, (5, 1, 4))
    W = compute_precoders(h, None, True)
    pt = dl_effective_channel(h, W, np.array([1.0]), 0.1, 3e-4, 130, 160)
    np.testing.assert_array_equal(pt.sigma2_eff, 3e-4)
    np.testing.assert_allclose(pt.g[:, 0], np.linalg.norm(h[:, 0], axis=1))


def test_dl_mismatch_is_zero_mean():
    cfg, model = _model(L=16, scheme="mmse")
    st_ = hardening_stats(model, cfg, np.random.default_rng(6), 2000)
    h, hhat = model.draw(2000, np.random.default_rng(7))
    U = compute_combiners(hhat, model.C, cfg.rho_ul, cfg.sigma2_ul, cfg.scheme, cfg.mode)
    pt = dl_effective_channel(h, compute_precoders(U, st_, True), st_.ghat_dl, cfg.rho_dl, cfg.sigma2_dl, 130, 160)
    diff = pt.g - pt.ghat
    se = np.sqrt(np.var(diff.real, axis=0) / 2000 + st_.ghat_dl_se**2)
    assert np.all(np.abs(diff.real.mean(axis=0)) < 5 * se)


def _hardening_ratio(L):
    cfg, model = _model(L=L, scheme="mr", seed=3, K=1, n_pilot=1, n=261)
    h, hhat = model.draw(3000, np.random.default_rng(8))
    W = compute_precoders(hhat, None, True)
    g = np.einsum("tid,tid->ti", h.conj(), W)[:, 0]
    return np.var(g) / abs(g.mean()) ** 2


def test_channel_hardening_improves_with_l():
    r = [_hardening_ratio(L) for L in (4, 16, 64)]
    assert r[0] > r[1] > r[2]


def test_link_model_draw_shapes():
    cfg, model = _model(L=4)
    h, hhat = model.draw(7, np.random.default_rng(0))
    assert h.shape == hhat.shape == (7, cfg.K, 4)
    assert isinstance(hardening_stats(model, cfg, np.random.default_rng(0), 50), HardeningStats)
