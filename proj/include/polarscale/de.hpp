#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "polarscale/common.hpp"
#include "polarscale/rng.hpp"

namespace polarscale::de {

/// Binomial pmf of Bin(q, x) together with both cumulative tails, computed
/// once in O(q). Terms are generated by the ratio recurrence from a
/// log-domain anchor at the mode and normalized, and each tail is
/// accumulated from its own small end with compensated summation, so both
/// P(Bin >= k) and P(Bin <= k) carry relative accuracy ~1e-13 across the
/// whole range. This is what makes V(psi_i(x)) = (psi (1-psi))^beta
/// evaluable near the absorbing endpoints.
class BinomialTails {
 public:
  BinomialTails(std::uint32_t q, Prob x);

  std::uint32_t q() const { return q_; }
  /// P(Bin(q,x) >= k), k in [0, q+1]
  double upper(std::uint32_t k) const;
  /// P(Bin(q,x) <= k), k in [0, q]
  double lower(std::uint32_t k) const;
  /// psi_i with complement: (P(Bin >= i+1), P(Bin <= i))
  Prob child(std::uint32_t i) const;

 private:
  std::uint32_t q_;
  std::vector<double> up_;   // up_[k] = P(Bin >= k), size q+2
  std::vector<double> low_;  // low_[k] = P(Bin <= k), size q+1
};

/// Erasure rate of the i-th effective channel after one polarization step of
/// the q-ary recursion: psi_i(x) = P(Bin(q, x) >= i+1).
double psi(std::uint32_t q, std::uint32_t i, double x);

/// psi_i evaluated on a complement-tracked probability.
Prob psi_pair(std::uint32_t q, std::uint32_t i, Prob x);

/// (1/q) sum_i psi_i(x); equal to x up to rounding (mean preservation).
double psi_mean_check(std::uint32_t q, double x);

/// Multiset of the q^n effective-channel erasure rates. Channel index is the
/// big-endian digit string of the applied branch indices: rate at index
/// sum_k i_k q^(n-k) equals psi_{i_n}(... psi_{i_1}(eps) ...), so profiles
/// are reproducible bit for bit.
struct ChannelProfile {
  std::uint32_t q = 2;
  std::uint32_t n = 0;
  double eps = 0.0;
  std::vector<double> rates;  // size q^n, lexicographic index order
};

inline constexpr std::uint64_t kMaterializeCap = 10'000'000;   // profile()
inline constexpr std::uint64_t kStreamCap = 100'000'000;       // profile_stream()

ChannelProfile profile(std::uint32_t q, std::uint32_t n, double eps);

/// Visit every rate in lexicographic index order without materializing the
/// profile. Usable up to kStreamCap channels.
void profile_stream(std::uint32_t q, std::uint32_t n, double eps,
                    const std::function<void(std::uint64_t index, double rate)>& visit);

struct Selection {
  std::vector<std::uint64_t> indices;  // ascending channel index
  double union_bound = 0.0;            // sum of the selected rates
};

/// Indices of the k smallest rates (ties broken toward the smaller channel
/// index) plus their sum, a union bound on the block erasure probability.
Selection select_channels(const ChannelProfile& p, std::uint64_t k);

/// Same selection over the profile stream with a bounded heap, for profiles
/// too large to materialize. Produces the identical result.
Selection select_channels_stream(std::uint32_t q, std::uint32_t n, double eps, std::uint64_t k);

struct ScalingQuery {
  double gamma = 1.0;  // > 0
  double delta = 0.25; // > 0
  double beta = 0.5;   // in (0, 1/2]
  double eta = 0.01;   // in (0, 1/2)
};

struct GapMetrics {
  double good_fraction = 0.0;  // fraction of rates <= N^-gamma
  double gap = 0.0;            // (1 - eps) - good_fraction
  double bound = 0.0;          // Theorem-style bound on the unpolarized mass
};

GapMetrics gap_metrics(const ChannelProfile& p, const ScalingQuery& query, double eps);

/// One trajectory of the polarization Markov chain: draw n branch indices
/// uniformly and return psi_{i_n}(... psi_{i_1}(x0) ...). Matches uniform
/// sampling of the channel profile.
double sample_chain(std::uint32_t q, std::uint32_t n, double x0, Rng& rng);

/// Fraction of q^n falling in [lo, hi], computed exactly from the profile
/// stream (helper shared by the CLI and the scaling checks).
double interval_fraction(std::uint32_t q, std::uint32_t n, double eps, double lo, double hi);

/// Histogram over [0,1] with the given number of equal bins; a rate equal to
/// 1.0 lands in the last bin.
std::vector<std::uint64_t> histogram(std::uint32_t q, std::uint32_t n, double eps,
                                     std::size_t bins);

}  // namespace polarscale::de
