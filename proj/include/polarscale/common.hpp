#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace polarscale {

inline constexpr const char* kVersion = "0.1.0";

/// Thrown when a documented precondition of an operation is violated.
/// The CLI maps this to exit code 3.
class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when an internal invariant fails (a bug, not a usage error).
/// The CLI maps this to exit code 4.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& msg) : std::logic_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw PreconditionError(msg);
}

/// An erasure probability together with its complement.
/// Carrying both sides keeps (x(1-x))^beta accurate when either
/// factor is within a few ulp of 0, which the tails of the
/// polarization maps reach quickly.
struct Prob {
  double p = 0.0;   // value in [0,1]
  double c = 1.0;   // complement 1-p, tracked independently

  static Prob of(double x) { return Prob{x, 1.0 - x}; }
};

/// Monte Carlo estimate with its binomial standard error.
struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t trials = 0;
};

/// Compensated (Kahan) accumulator for long sums of same-sign terms.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double term) {
    double y = term - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

}  // namespace polarscale
