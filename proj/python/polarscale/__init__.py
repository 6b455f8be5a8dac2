"""Finite-length scaling toolkit for q-ary polar codes on erasure channels."""

from ._core import (
    Kernel,
    PreconditionError,
    __version__,
    apply_operator,
    check_inequalities,
    conjecture1,
    conjecture2,
    gaussian_binomial,
    gaussian_q,
    interval_fraction,
    lambda_sup,
    lambda_tilde,
    lemma2_bound,
    m_beta,
    phi_bar,
    phi_count,
    profile,
    psi,
    psi_mean_check,
    q0_threshold,
    rank_dist,
    rho,
    rho_mc,
    sample_chain,
    select_channels,
    theorem1_bound,
    theorem1_bound_onesided,
    theorem1_exponent,
    theta,
)

__all__ = [
    "Kernel",
    "PreconditionError",
    "__version__",
    "apply_operator",
    "check_inequalities",
    "conjecture1",
    "conjecture2",
    "gaussian_binomial",
    "gaussian_q",
    "interval_fraction",
    "lambda_sup",
    "lambda_tilde",
    "lemma2_bound",
    "m_beta",
    "phi_bar",
    "phi_count",
    "profile",
    "psi",
    "psi_mean_check",
    "q0_threshold",
    "rank_dist",
    "rho",
    "rho_mc",
    "sample_chain",
    "select_channels",
    "theorem1_bound",
    "theorem1_bound_onesided",
    "theorem1_exponent",
    "theta",
]
