"""Finite-blocklength RCUs bound for the scalar mismatched-decoding channel."""
from .approx import (
    EpsilonEstimate,
    ExponentUnreachable,
    epsilon_normal,
    epsilon_saddlepoint,
    optimize_s,
    solve_saddlepoint,
)
from .density import (
    CgfDomainError,
    CgfTriple,
    QuadDecomposition,
    ScalarChannelPoint,
    cgf,
    gen_info_density,
    log_m1_from_bits,
    quad_decomposition,
    quadratic_form,
)
from .montecarlo import epsilon_rcus_mc, mc_cgf, snn_error_rate

__all__ = [
    "CgfDomainError",
    "CgfTriple",
    "EpsilonEstimate",
    "ExponentUnreachable",
    "QuadDecomposition",
    "ScalarChannelPoint",
    "cgf",
    "epsilon_normal",
    "epsilon_rcus_mc",
    "epsilon_saddlepoint",
    "gen_info_density",
    "log_m1_from_bits",
    "mc_cgf",
    "optimize_s",
    "quad_decomposition",
    "quadratic_form",
    "snn_error_rate",
    "solve_saddlepoint",
]
