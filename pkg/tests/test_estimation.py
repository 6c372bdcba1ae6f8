import numpy as np
import pytest

from cellfree_urllc.channel import correlation_factors, local_scattering_corr, sample_channels
from cellfree_urllc.estimation import (
    PilotConfig,
    UnsupportedFeature,
    despread_pilots,
    estimator_matrices,
    mmse_channel_estimate,
)

DELTA = np.deg2rad(25.0)


def _R(M=3, beta=1.0, phi=0.4):
    return local_scattering_corr(beta, phi, DELTA, M)[None, None]


def test_scalar_phi_example():
    pc = PilotConfig(40, 0.1, 2.5e-10)  # rho np = 4 mW
    _, Phi, C = estimator_matrices(np.array([[[[1e-7]]]]), pc)
    expect = 4.0 * 1e-14 / (4e-7 + 2.5e-10)
    assert Phi[0, 0, 0, 0].real == pytest.approx(expect, rel=1e-12)
    assert Phi[0, 0, 0, 0].real == pytest.approx(9.99e-8, rel=1e-3)
    assert C[0, 0, 0, 0].real == pytest.approx(1e-7 - expect, rel=1e-9)


def test_high_snr_phi_tends_to_r():
    R = _R()
    _, Phi, C = estimator_matrices(R, PilotConfig(10, 1.0, 1e-12))
    np.testing.assert_allclose(Phi, R, atol=1e-9)


def test_zero_power_gives_no_information(rng):
    R = _R()
    pc = PilotConfig(4, 0.0, 1.0)
    h = sample_channels(correlation_factors(R), 10, rng)
    est = mmse_channel_estimate(despread_pilots(h, pc, rng), R, pc)
    assert np.all(est.hhat == 0)
    assert np.all(est.Phi == 0)
    np.testing.assert_allclose(est.C, R)


def test_noiseless_despreading(rng):
    R = _R()
    pc = PilotConfig(4, 0.5, 0.0)
    h = sample_channels(correlation_factors(R), 5, rng)
    np.testing.assert_allclose(despread_pilots(h, pc, rng), np.sqrt(2.0) * h)


def test_shared_pilots_rejected():
    with pytest.raises(UnsupportedFeature):
        PilotConfig(4, 1.0, 1.0, assignment=(0, 0)).check(2)


def _mc(rng, N=100_000):
    R = _R(M=2, beta=1.0, phi=0.4)
    pc = PilotConfig(4, 0.1, 0.2)
    h = sample_channels(correlation_factors(R), N, rng)
    y = despread_pilots(h, pc, rng)
    est = mmse_channel_estimate(y, R, pc)
    return R, pc, h[:, 0, 0], y[:, 0, 0], est


def _cov(a, b):
    return np.einsum("tm,tn->mn", a, b.conj()) / a.shape[0]


def _se(Pa, Pb, N):
    return np.sqrt(np.outer(np.diag(Pa).real, np.diag(Pb).real) / N)


def test_observation_covariance(rng):
    R, pc, h, y, _ = _mc(rng)
    Q = pc.gain * R[0, 0] + pc.sigma2_ul * np.eye(2)
    assert np.all(np.abs(_cov(y, y) - Q) < 5 * _se(Q, Q, y.shape[0]))


def test_orthogonality_principle(rng):
    R, pc, h, y, est = _mc(rng)
    hhat = est.hhat[:, 0, 0]
    e = h - hhat
    C, Phi = est.C[0, 0], est.Phi[0, 0]
    N = h.shape[0]
    assert np.all(np.abs(_cov(e, hhat)) < 5 * _se(C, Phi, N))
    assert np.all(np.abs(_cov(e, y)) < 5 * _se(C, pc.gain * R[0, 0] + pc.sigma2_ul * np.eye(2), N))


def test_estimate_and_error_covariances(rng):
    R, pc, h, y, est = _mc(rng)
    hhat = est.hhat[:, 0, 0]
    C, Phi = est.C[0, 0], est.Phi[0, 0]
    N = h.shape[0]
    assert np.all(np.abs(_cov(hhat, hhat) - Phi) < 5 * _se(Phi, Phi, N))
    assert np.all(np.abs(_cov(h - hhat, h - hhat) - C) < 5 * _se(C, C, N))
    np.testing.assert_allclose(Phi + C, R[0, 0], atol=1e-14)
    assert np.linalg.eigvalsh(C).min() > -1e-14
