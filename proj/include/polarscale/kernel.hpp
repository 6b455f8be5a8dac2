#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "polarscale/common.hpp"
#include "polarscale/gf.hpp"
#include "polarscale/rng.hpp"

namespace polarscale::kernel {

/// An invertible m x m polarization kernel over F_q. Row i is the generator
/// of the i-th decoding step: step i sees the subcode spanned by rows
/// i..m-1, so row 0 is the first-decoded (worst) channel.
class Kernel {
 public:
  explicit Kernel(gf::Matrix g);  // checks squareness and invertibility

  const gf::Matrix& matrix() const { return g_; }
  std::uint32_t m() const { return static_cast<std::uint32_t>(g_.rows()); }
  std::uint32_t q() const { return g_.field()->q(); }

  Kernel row_reversed() const;

 private:
  gf::Matrix g_;
};

/// E^(i)(S) = rk([e_1 G_S^(i)]) - rk(G_S^(i)): 1 iff input symbol i stays
/// erased when exactly the output positions in s_cols were received.
/// G^(i) is G with its first i rows removed.
int erasure_indicator(const Kernel& k, std::uint32_t i, const std::vector<std::uint32_t>& s_cols);

/// Exact effective-channel erasure polynomials of a kernel, in the received-
/// count basis: phi_i(x) = sum_d a[i][d] x^(m-d) (1-x)^d with
/// a[i][d] = #{S : |S| = d, E^(i)(S) = 1}.
class ProfilePolynomial {
 public:
  ProfilePolynomial(std::uint32_t m, std::uint32_t q, std::vector<std::uint64_t> coeffs);

  std::uint32_t m() const { return m_; }
  std::uint32_t q() const { return q_; }
  std::uint64_t at(std::uint32_t i, std::uint32_t d) const { return a_[i * (m_ + 1) + d]; }

  double eval(std::uint32_t i, double x) const;
  Prob eval_pair(std::uint32_t i, Prob x) const;

  /// Rows as coefficient vectors, one per channel index.
  std::vector<std::vector<std::uint64_t>> rows() const;

  /// CSV export, header "i,d,a_id" then one row per coefficient.
  void store_csv(std::ostream& os) const;

 private:
  std::uint32_t m_ = 0, q_ = 0;
  std::vector<std::uint64_t> a_;  // row-major m x (m+1)
};

inline constexpr std::uint32_t kDefaultSubsetCap = 20;  // 2^20 subsets

/// Enumerates all 2^m received sets once; each subset costs one elimination
/// pass that yields E^(i)(S) for every i (bottom-up row insertion). Kernels
/// over F_2 run on bit-packed rows. Throws above the subset cap and points
/// at phi_mc.
ProfilePolynomial profile_poly(const Kernel& k, std::uint32_t subset_cap = kDefaultSubsetCap);

/// Monte Carlo estimate of phi_i(x): sample erasure sets with per-symbol
/// probability x and average the erasure indicator.
MonteCarloEstimate phi_mc(const Kernel& k, std::uint32_t i, double x, std::uint64_t trials,
                          Rng& rng);

/// Arikan kernel [[1,0],[1,1]] tensored with itself `levels` times (F_2).
Kernel arikan_tensor(std::uint32_t levels);

/// Reed-Solomon polarization kernel candidate: the q x q Vandermonde matrix
/// on all field elements in index order with rows in decreasing power order,
/// V[r][c] = (element_c)^(q-1-r) (0^0 = 1). With this row order the i-th
/// decoding step sees the degree-(q-1-i) evaluation subcode, which is MDS.
Kernel vandermonde(std::uint32_t q);

/// True iff the profile multiset equals the q-ary binomial-tail profile
/// {psi_i} of the Reed-Solomon recursion (exact integer comparison).
bool rs_profile_matches(const ProfilePolynomial& p);

/// Text format: line 1 "q m [modulus coefficients, ascending degree]"
/// (modulus present iff q is a proper prime power), then m rows of m element
/// indices in [0, q). Load rejects non-invertible matrices.
Kernel load(std::istream& is);
Kernel load_file(const std::string& path);
void store(const Kernel& k, std::ostream& os);
void store_file(const Kernel& k, const std::string& path);

}  // namespace polarscale::kernel
