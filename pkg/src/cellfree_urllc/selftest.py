"""Fast invariant checks runnable from the command line."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import local_scattering_corr, pathloss_db
from .config import AreaSpec, SimConfig
from .estimation import PilotConfig, despread_pilots, estimator_matrices
from .fbl import (
    ScalarChannelPoint,
    cgf,
    epsilon_rcus_mc,
    epsilon_saddlepoint,
    gen_info_density,
    quad_decomposition,
    quadratic_form,
)
from .geometry import Deployment, pairwise_geometry


@dataclass
class Check:
    name: str
    ok: bool
    detail: str

    def __post_init__(self):
        self.ok = bool(self.ok)


def _check_quadratic_form(rng):
    pt = ScalarChannelPoint(0.8 + 0.3j, 0.7 + 0.2j, 0.3, 1.5, 10, 3.0)
    s = 0.9
    q = (rng.standard_normal(200) + 1j * rng.standard_normal(200)) / np.sqrt(2)
    z = (rng.standard_normal(200) + 1j * rng.standard_normal(200)) / np.sqrt(2)
    v = pt.g * q + z
    A, d = quadratic_form(s, pt)
    w = np.stack([q, z], axis=-1)
    quad = np.real(np.einsum("ki,ij,kj->k", w.conj(), A, w)) + d
    err = float(np.max(np.abs(quad - gen_info_density(s, pt, q, v))))
    return Check("quadratic-form representation", err < 1e-12, f"max abs err {err:.2e}")


def _check_cgf_zero():
    dec = quad_decomposition(1.0, ScalarChannelPoint(1.0, 0.9, 1.0, 1.0, 100, 10.0))
    k = cgf(0.0, dec)
    return Check("kappa(0) = 0", abs(k.kappa) < 1e-15, f"kappa(0) = {k.kappa:.1e}")


def _check_matched_fixture():
    dec = quad_decomposition(1.0, ScalarChannelPoint(1.0, 1.0, 1.0, 1.0, 100, 10.0))
    lam = sorted([float(dec.lambda1), float(dec.lambda2)])
    err = max(abs(lam[0] + 2**-0.5), abs(lam[1] - 2**-0.5), abs(float(dec.d) - np.log(2)))
    return Check("matched fixture eigenvalues and d", err < 1e-12, f"max err {err:.1e}")


def _check_scale_invariance():
    pt = ScalarChannelPoint(0.9 + 0.1j, 1.0, 0.2, 1.0, 130, 160 * np.log(2))
    a = epsilon_saddlepoint(pt, 1.0 / 0.2).log_value
    c = 3.0 - 2.0j
    b = epsilon_saddlepoint(pt.scaled(c), 1.0 / (0.2 * abs(c) ** 2)).log_value
    err = abs(a - b) / abs(a)
    return Check("scale invariance of eps", err < 1e-10, f"rel err {err:.1e}")


def _check_saddlepoint_vs_mc(rng):
    pt = ScalarChannelPoint(1.0, 0.95, 0.3, 1.0, 130, 160 * np.log(2))
    s = 3.0
    sp = epsilon_saddlepoint(pt, s)
    mc = epsilon_rcus_mc(pt, s, 20_000, float(min(sp.zeta_used, 1.0)), rng)
    dlog = abs(sp.log_value - mc.log_value)
    tol = max(0.15, 3 * mc.stderr / mc.value)
    return Check("saddlepoint vs MC-IS", dlog <= tol, f"|dlog| {dlog:.3f}, tol {tol:.3f}, eps {sp.value:.2e}")


def _check_pathloss():
    err = abs(pathloss_db(10.0) - (-68.1))
    return Check("pathloss at 10 m", err < 1e-9, f"{pathloss_db(10.0):.4f} dB")


def _check_correlation():
    R = local_scattering_corr(1.0, 0.3, np.deg2rad(25), 4)
    herm = float(np.max(np.abs(R - R.conj().T)))
    tr = abs(np.trace(R).real - 4.0)
    ev = float(np.linalg.eigvalsh(R).min())
    ok = herm < 1e-14 and tr < 1e-12 and ev > -1e-10
    return Check("correlation Hermitian, trace, PSD", ok, f"herm {herm:.1e} trace {tr:.1e} min eig {ev:.1e}")


def _check_wrap():
    dep = Deployment("cellfree", np.array([[1.0, 1.0]]), np.array([[149.0, 149.0]]), 1, 1, 1)
    d = float(pairwise_geometry(dep, AreaSpec()).d[0, 0])
    expect = np.sqrt(2 * 2.0**2 + 10.0**2)
    return Check("wrap-around distance", abs(d - expect) < 1e-9, f"{d:.4f} m")


def _check_orthogonality(rng):
    R = local_scattering_corr(1.0, 0.2, np.deg2rad(25), 2)[None, None]
    pc = PilotConfig(4, 0.1, 0.05)
    W, Phi, C = estimator_matrices(R, pc)
    F = np.linalg.cholesky(R[0, 0] + 1e-15 * np.eye(2))
    N = 20_000
    h = np.einsum("mn,tn->tm", F, (rng.standard_normal((N, 2)) + 1j * rng.standard_normal((N, 2))) / np.sqrt(2))
    y = despread_pilots(h[:, None, None, :], pc, rng)
    hhat = np.einsum("mn,tn->tm", W[0, 0], y[:, 0, 0])
    cross = np.abs((h - hhat).T @ hhat.conj() / N).max()
    bound = 6 * np.sqrt(np.trace(C[0, 0]).real * np.trace(Phi[0, 0]).real / N)
    return Check("estimation-error orthogonality", cross < bound, f"|E[e hhat^H]| {cross:.2e} < {bound:.2e}")


def run_selftest(seed=0):
    rng = np.random.default_rng(seed)
    SimConfig()  # defaults must validate
    return [
        _check_quadratic_form(rng),
        _check_cgf_zero(),
        _check_matched_fixture(),
        _check_scale_invariance(),
        _check_saddlepoint_vs_mc(rng),
        _check_pathloss(),
        _check_correlation(),
        _check_wrap(),
        _check_orthogonality(rng),
    ]
