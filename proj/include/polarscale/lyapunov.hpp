#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "polarscale/bounds.hpp"
#include "polarscale/common.hpp"
#include "polarscale/de.hpp"
#include "polarscale/ensemble.hpp"
#include "polarscale/kernel.hpp"

namespace polarscale::lyapunov {

/// One polarization step as a map from an erasure rate to its child rates:
/// the q-ary binomial-tail recursion, a fixed kernel's exact profile
/// polynomials, or the full-rank-ensemble average. All three send [0,1] to
/// [0,1] and preserve the mean.
class PolarOperator {
 public:
  static PolarOperator rs(std::uint32_t q);
  static PolarOperator fixed(kernel::ProfilePolynomial poly, std::string name);
  static PolarOperator fixed(const kernel::Kernel& k, std::string name = "");
  static PolarOperator ensemble_avg(ensemble::RhoTable table);

  std::uint32_t arity() const;
  /// Whether 1 - child_i(x) = child_{arity-1-i}(1-x) holds, which lets the
  /// supremum search fold the domain onto (0, 1/2].
  bool symmetric() const;
  void children(Prob x, std::vector<Prob>& out) const;
  std::string describe() const;

  struct Impl;
  std::shared_ptr<const Impl> impl;
};

/// Test function V on [0,1]: Power((x(1-x))^beta), an operator iterate of a
/// base function, or a sampled piecewise-linear grid.
class LyapunovFn {
 public:
  static LyapunovFn power(double beta);
  static LyapunovFn identity();
  /// (T^depth base). Evaluated by exact recursion while arity^depth <= 64
  /// leaf evaluations per point (depth 6 at q = 2); deeper iterates are
  /// cached on a 1e5-point grid with piecewise-linear interpolation, whose
  /// error estimate grid_error() reports.
  static LyapunovFn iterated(LyapunovFn base, PolarOperator op, std::uint32_t depth);
  static LyapunovFn grid(std::vector<double> xs, std::vector<double> ys);

  double operator()(double x) const;
  double eval(Prob x) const;
  bool symmetric() const;
  /// Power exponent at the root of the definition; NaN when there is none.
  double beta() const;
  /// Interpolation-error estimate (max |second difference| / 8) when this
  /// function is grid-backed; 0 for exact forms.
  double grid_error() const;
  std::string describe() const;

  struct Impl;
  std::shared_ptr<const Impl> impl;
};

/// (T V)(x): the exact average of V over the operator's children at x.
double apply_operator(const PolarOperator& op, const LyapunovFn& v, double x);
double apply_operator(const PolarOperator& op, const LyapunovFn& v, Prob x);

/// (T V)(x) / V(x).
double contraction_ratio(const PolarOperator& op, const LyapunovFn& v, double x);

struct LambdaReport {
  double lambda = 0.0;
  double argmax_x = 0.0;
  std::size_t grid_points = 0;
  double refine_tol = 0.0;
  double beta = 0.0;  // NaN when V has no power base
  std::string op;
  double grid_lambda = 0.0;     // best value on the uniform grid
  double refined_lambda = 0.0;  // golden-section value near the best cell
  bool symmetric_search = false;
};

inline constexpr std::size_t kDefaultGridPoints = 10'000;
inline constexpr double kDefaultRefineTol = 1e-10;
/// The ratio is evaluated from this point instead of 0: V vanishes at the
/// absorbing states and the analytic boundary limit q^(beta-1) < 1 rules
/// out a supremum hiding there.
inline constexpr double kBoundaryEps = 1e-12;

/// sup_x (T V)(x) / V(x) by uniform grid scan plus golden-section
/// refinement. When both the operator and V are symmetric about 1/2 the
/// scan covers (0, 1/2] only.
LambdaReport lambda_sup(const PolarOperator& op, const LyapunovFn& v,
                        std::size_t grid_points = kDefaultGridPoints,
                        double refine_tol = kDefaultRefineTol);

/// sup_x num(x) / den(x) under the same search protocol (operator-power
/// contraction factors, e.g. comparing a kernel tensor step against
/// iterated base steps).
LambdaReport sup_ratio(const LyapunovFn& num, const LyapunovFn& den,
                       std::size_t grid_points = kDefaultGridPoints,
                       double refine_tol = kDefaultRefineTol);

/// lambda of a fixed kernel at V = Power(beta) via its exact profile.
LambdaReport lambda_kernel(const kernel::Kernel& k, double beta,
                           std::size_t grid_points = kDefaultGridPoints,
                           double refine_tol = kDefaultRefineTol);

/// Gaussian upper tail Q(z) = P(N(0,1) > z), via erfc.
double gaussian_Q(double z);

/// m(beta) = integral over z of (Q(z) Q(-z))^beta, by adaptive Simpson with
/// 1e-8 local tolerance; the truncation point grows like sqrt(80/beta) so
/// the total error stays below 1e-6 for every beta.
double m_beta(double beta);

/// Gaussian-approximation contraction estimate
/// m(beta)/sqrt(q) * (1/4)^(1/2-beta).
double lambda_tilde(std::uint32_t q, double beta);

struct InequalityReport {
  std::string name;
  double min_slack = 0.0;
  double witness_x = 0.0;
  double witness_y = 0.0;  // used by the two-variable sweeps
  bool pass = false;       // min_slack >= -1e-12
};

inline constexpr double kSlackTolerance = -1e-12;

/// Numeric sweeps of the inequalities behind the contraction bound:
///  (a) d(y,x) <= D(y||x) for x <= y,
///  (b) D(y||x) >= (y-x) + (1-y) ln((1-y)/(1-x)),
///  (c) 1 - z + z ln z >= (1-z)^2 / 2 on [0,1],
///  (d) (1/q) V(psi_{ceil(qx)-1}(x)) <= (2x(1-x))^beta / sqrt(2q) on [1/2,1],
///  (e) (T_q V)(x) <= (2x(1-x))^beta/sqrt(2q) + A sqrt(x(1-x)/(q beta))
///      with A = sqrt(pi) + sqrt(4 pi / 3) + sqrt(pi / 2), on [1/2,1].
/// Each report carries the minimum slack and its witness point.
std::vector<InequalityReport> check_proof_inequalities(std::uint32_t q, double beta,
                                                       std::size_t grid_points = kDefaultGridPoints);

}  // namespace polarscale::lyapunov
