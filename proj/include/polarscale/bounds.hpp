#pragma once

#include <cstdint>

namespace polarscale::lyapunov {

/// Closed-form upper bound on the RS(q) contraction constant for
/// V(x) = (x(1-x))^beta, beta in (0, 1/2]:  6/sqrt(q beta) * (1/4)^(1/2-beta).
double lemma2_bound(std::uint32_t q, double beta);

/// Exponent of the blocklength in the finite-length scaling bound:
/// gamma*beta - 1/2 + (ln 6 - (1/2) ln beta + (beta - 1/2) ln 4) / ln q.
/// The alphabet size is integral, but the formula extends to real q >= 2;
/// threshold sweeps evaluate it at q values far beyond any integer type.
double theorem1_exponent(double q, double gamma, double beta);

/// Bound on P(X_n in [N^-gamma, 1-N^-gamma]) with N = q^n. Requires
/// N^-gamma <= 3/4 (throws PreconditionError naming that hypothesis).
double theorem1_bound(double q, std::uint32_t n, double gamma, double beta);

/// One-sided variant: bound on P(X_n >= N^-gamma | X_0 = x), which adds
/// x / (1 - N^-gamma) to the two-sided bound.
double theorem1_bound_onesided(double q, std::uint32_t n, double gamma, double beta, double x);

/// Alphabet-size threshold from the near-optimal-scaling corollary:
/// with beta = delta/(2 gamma),
/// ln q0 = (1/delta) (2 beta ln 4 - ln beta + 2 ln 6 - ln 4).
/// For q >= q0 the scaling exponent at that beta is <= -1/2 + delta.
double q0_threshold(double gamma, double delta);

}  // namespace polarscale::lyapunov
