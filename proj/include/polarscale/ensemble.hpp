#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "polarscale/common.hpp"
#include "polarscale/rng.hpp"

namespace polarscale::ensemble {

// Exact arithmetic for the full-rank-ensemble combinatorics. The q^((m-i-j)(m-i-l))
// factors reach ~2^4096 at m = 64, so everything below stays rational until
// the final conversion to double at the phi_bar boundary.
using BigInt = mpz_class;
using Rational = mpq_class;

/// Gaussian binomial [k j]_q: the number of j-dimensional subspaces of F_q^k,
/// prod_{l=0..j-1} (q^k - q^l)/(q^j - q^l). Zero for j > k or j < 0.
BigInt gaussian_binomial(std::int64_t k, std::int64_t j, std::uint32_t q);

/// phi(j, i, q) = prod_{l=0..j-1} (q^i - q^l): the number of ordered sets of
/// j linearly independent vectors in F_q^i. Zero when j > i.
BigInt phi_count(std::int64_t j, std::int64_t i, std::uint32_t q);

/// P(rk(G') = j) for a uniform random G' in F_q^(k x d):
/// phi(j, d, q) [k j]_q q^(-kd).
Rational rank_dist(std::uint32_t k, std::uint32_t d, std::uint32_t q, std::uint32_t j);

/// Joint rank probability P(rk(G'_S) = j, rk(G') = r) for a uniform random
/// G' in F_q^(k x m) and any fixed S with |S| = d.
Rational theta(std::uint32_t m, std::uint32_t k, std::uint32_t d, std::uint32_t r,
               std::uint32_t j, std::uint32_t q);

/// rho(m, i, d, q) = P(e_1 not in colspace(G_S^(i))) for a uniform full-rank
/// m x m matrix G, where G^(i) drops the first i rows and S is any column set
/// of size d. Closed form, exact.
Rational rho(std::uint32_t m, std::uint32_t i, std::uint32_t d, std::uint32_t q);

/// All rho(m, i, d, q) for i in [0, m), d in [0, m]. Construction
/// parallelizes over cells (POLARSCALE_THREADS caps the worker count).
class RhoTable {
 public:
  RhoTable(std::uint32_t m, std::uint32_t q);

  std::uint32_t m() const { return m_; }
  std::uint32_t q() const { return q_; }
  const Rational& at(std::uint32_t i, std::uint32_t d) const;
  double at_double(std::uint32_t i, std::uint32_t d) const { return rho_d_[i * (m_ + 1) + d]; }

  /// Cache file: line 1 "m q", then one line "i d num/den" per cell in
  /// canonical lowest terms; round-trips bit-exactly.
  void store(std::ostream& os) const;
  void store_file(const std::string& path) const;
  static RhoTable load(std::istream& is);
  static RhoTable load_file(const std::string& path);
  /// Load from <dir>/rho_m<m>_q<q>.txt when present, else build and store.
  static RhoTable load_or_build(std::uint32_t m, std::uint32_t q, const std::string& cache_dir);

 private:
  RhoTable() = default;
  void fill_doubles();

  std::uint32_t m_ = 0, q_ = 0;
  std::vector<Rational> rho_;   // row-major, m x (m+1)
  std::vector<double> rho_d_;
};

/// Monte Carlo estimate of rho(m, i, d, q): sample uniform full-rank
/// (m-i) x m matrices, keep the first d columns (the ensemble is invariant
/// under column permutations) and test e_1 against their span.
MonteCarloEstimate rho_mc(std::uint32_t m, std::uint32_t i, std::uint32_t d, std::uint32_t q,
                          std::uint64_t trials, Rng& rng);

/// One sampling pass estimating rho(m, i, d, q) for every d at once, using
/// the monotonicity of span membership in d.
std::vector<MonteCarloEstimate> rho_mc_all_d(std::uint32_t m, std::uint32_t i, std::uint32_t q,
                                             std::uint64_t trials, Rng& rng);

/// Ensemble-averaged one-step erasure map
/// phibar_i(x) = sum_d C(m,d) x^(m-d) (1-x)^d rho(m,i,d,q).
double phi_bar(const RhoTable& table, std::uint32_t i, double x);
Prob phi_bar_pair(const RhoTable& table, std::uint32_t i, Prob x);

/// Iterates of the averaged operator on a uniform grid:
/// gbar_0(x) = (x(1-x))^beta, gbar_{k+1}(x) = (1/m) sum_i gbar_k(phibar_i(x)).
struct GbarSequence {
  std::vector<double> xs;                   // uniform grid on [0,1]
  std::vector<std::vector<double>> levels;  // levels[k] = gbar_{k+1} on xs
  double beta = 0.0;

  /// Piecewise-linear interpolation error estimate for level k:
  /// max |second difference| / 8.
  double interp_error_estimate(std::size_t k) const;
};

GbarSequence gbar_sequence(const RhoTable& table, double beta, std::uint32_t n,
                           std::size_t grid_points);

/// Exact gbar_k(x) by the m^k recursion (no grid), for small k.
double gbar_exact(const RhoTable& table, double beta, std::uint32_t k, double x);

struct ConcavityReport {
  bool concave = true;
  std::uint32_t first_violation_level = 0;  // 1-based; 0 when concave
  double worst_second_difference = 0.0;     // most positive on the raw grid
  double violation_x = 0.0;
  std::uint64_t exact_rechecks = 0;         // grid triples re-evaluated exactly
};

/// Second-difference concavity check of gbar_1..gbar_n on the grid. A
/// positive second difference beyond +1e-9 counts as a violation only if it
/// survives exact re-evaluation of the triple: levels >= 2 are sampled from
/// composed piecewise-linear interpolants, whose error shows up as spurious
/// O(grid^-2) convex bumps. gbar_1 is always evaluated exactly.
ConcavityReport check_conjecture1(const RhoTable& table, double beta, std::uint32_t n,
                                  std::size_t grid_points);

struct ScalingFit {
  std::vector<std::uint32_t> ms;
  std::vector<double> lambdas;   // lambda_m = sup gbar_1/gbar_0 per m
  double slope = 0.0;            // least-squares slope of ln lambda vs ln m
  double intercept = 0.0;
  std::vector<double> residuals;
};

/// Regression report of ln lambda_m against ln m over the supplied sizes.
/// Evidence only: nothing here asserts the conjectured limit of -1/2.
ScalingFit check_conjecture2(const std::vector<std::uint32_t>& ms, std::uint32_t q, double beta,
                             const std::string& cache_dir, std::size_t grid_points,
                             double refine_tol);

}  // namespace polarscale::ensemble
