#include "polarscale/de.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polarscale/bounds.hpp"

namespace polarscale::de {
namespace {

void check_prob(double x, const char* what) {
  require(std::isfinite(x) && x >= 0.0 && x <= 1.0,
          std::string(what) + " must lie in [0,1]");
}

std::uint64_t pow_checked(std::uint32_t q, std::uint32_t n, std::uint64_t cap) {
  std::uint64_t acc = 1;
  for (std::uint32_t k = 0; k < n; ++k) {
    if (acc > cap / q)
      throw PreconditionError("q^n exceeds the configured cap of " + std::to_string(cap) +
                              " channels");
    acc *= q;
  }
  return acc;
}

}  // namespace

BinomialTails::BinomialTails(std::uint32_t q, Prob x)
    : q_(q), up_(q + 2, 0.0), low_(q + 1, 0.0) {
  require(q >= 1, "binomial order q must be >= 1");
  if (x.p <= 0.0) {
    up_[0] = 1.0;
    std::fill(low_.begin(), low_.end(), 1.0);
    return;
  }
  if (x.c <= 0.0) {
    std::fill(up_.begin(), up_.begin() + q + 1, 1.0);
    low_[q] = 1.0;
    return;
  }

  // pmf by the ratio recurrence from a log-domain anchor at the mode; the
  // mode term is >= 1/(q+1), so the anchor never underflows.
  std::vector<double> t(q + 1, 0.0);
  auto j0 = static_cast<std::uint32_t>(
      std::min<double>(q, std::floor((static_cast<double>(q) + 1.0) * x.p)));
  double log_anchor = std::lgamma(q + 1.0) - std::lgamma(j0 + 1.0) - std::lgamma(q - j0 + 1.0) +
                      j0 * std::log(x.p) + (q - j0) * std::log(x.c);
  t[j0] = std::exp(log_anchor);
  const double r_up = x.p / x.c;
  for (std::uint32_t j = j0; j < q; ++j) {
    t[j + 1] = t[j] * r_up * (static_cast<double>(q - j) / (j + 1.0));
    if (t[j + 1] == 0.0) break;
  }
  const double r_down = x.c / x.p;
  for (std::uint32_t j = j0; j > 0; --j) {
    t[j - 1] = t[j] * r_down * (static_cast<double>(j) / (q - j + 1.0));
    if (t[j - 1] == 0.0) break;
  }
  KahanSum total;
  for (double v : t) total.add(v);
  const double scale = 1.0 / total.value();

  // each tail accumulated from its own small end
  KahanSum up;
  up_[q + 1] = 0.0;
  for (std::uint32_t k = q + 1; k > 0; --k) {
    up.add(t[k - 1] * scale);
    up_[k - 1] = std::min(1.0, up.value());
  }
  KahanSum low;
  for (std::uint32_t k = 0; k <= q; ++k) {
    low.add(t[k] * scale);
    low_[k] = std::min(1.0, low.value());
  }
}

double BinomialTails::upper(std::uint32_t k) const { return k <= q_ + 1 ? up_[k] : 0.0; }
double BinomialTails::lower(std::uint32_t k) const { return k <= q_ ? low_[k] : 1.0; }

Prob BinomialTails::child(std::uint32_t i) const { return Prob{up_[i + 1], low_[i]}; }

Prob psi_pair(std::uint32_t q, std::uint32_t i, Prob x) {
  require(i < q, "channel index i must lie in [0, q)");
  check_prob(x.p, "erasure probability x");
  return BinomialTails(q, x).child(i);
}

double psi(std::uint32_t q, std::uint32_t i, double x) {
  return psi_pair(q, i, Prob::of(x)).p;
}

double psi_mean_check(std::uint32_t q, double x) {
  check_prob(x, "erasure probability x");
  BinomialTails bt(q, Prob::of(x));
  KahanSum s;
  for (std::uint32_t i = 0; i < q; ++i) s.add(bt.child(i).p);
  return s.value() / q;
}

ChannelProfile profile(std::uint32_t q, std::uint32_t n, double eps) {
  require(q >= 1, "q must be >= 1");
  check_prob(eps, "initial erasure probability");
  std::uint64_t n_channels = pow_checked(q, n, kMaterializeCap);
  ChannelProfile p;
  p.q = q;
  p.n = n;
  p.eps = eps;
  p.rates = {eps};
  p.rates.reserve(n_channels);
  for (std::uint32_t stage = 0; stage < n; ++stage) {
    std::vector<double> next;
    next.reserve(p.rates.size() * q);
    for (double r : p.rates) {
      BinomialTails bt(q, Prob::of(r));
      for (std::uint32_t i = 0; i < q; ++i) next.push_back(bt.child(i).p);
    }
    p.rates = std::move(next);
  }
  return p;
}

void profile_stream(std::uint32_t q, std::uint32_t n, double eps,
                    const std::function<void(std::uint64_t, double)>& visit) {
  require(q >= 1, "q must be >= 1");
  check_prob(eps, "initial erasure probability");
  pow_checked(q, n, kStreamCap);
  std::uint64_t index = 0;
  // depth-first over branch digits, most significant first
  auto walk = [&](auto&& self, double rate, std::uint32_t depth) -> void {
    if (depth == n) {
      visit(index++, rate);
      return;
    }
    BinomialTails bt(q, Prob::of(rate));
    for (std::uint32_t i = 0; i < q; ++i) self(self, bt.child(i).p, depth + 1);
  };
  walk(walk, eps, 0);
}

Selection select_channels(const ChannelProfile& p, std::uint64_t k) {
  require(k <= p.rates.size(), "k exceeds the number of channels");
  std::vector<std::uint64_t> order(p.rates.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::uint64_t a, std::uint64_t b) {
    if (p.rates[a] != p.rates[b]) return p.rates[a] < p.rates[b];
    return a < b;
  };
  if (k < order.size()) {
    std::nth_element(order.begin(), order.begin() + k, order.end(), better);
    order.resize(k);
  }
  std::sort(order.begin(), order.end());
  Selection sel;
  sel.indices = std::move(order);
  KahanSum bound;
  for (std::uint64_t idx : sel.indices) bound.add(p.rates[idx]);
  sel.union_bound = bound.value();
  return sel;
}

Selection select_channels_stream(std::uint32_t q, std::uint32_t n, double eps,
                                 std::uint64_t k) {
  // max-heap of the k best (rate, index) pairs seen so far; the heap top is
  // the worst kept entry under the same (rate, index) order as the
  // materialized path, so both produce identical selections.
  using Entry = std::pair<double, std::uint64_t>;
  std::vector<Entry> heap;
  heap.reserve(k);
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  };
  profile_stream(q, n, eps, [&](std::uint64_t index, double rate) {
    Entry e{rate, index};
    if (heap.size() < k) {
      heap.push_back(e);
      std::push_heap(heap.begin(), heap.end(), worse);
    } else if (k > 0 && worse(e, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), worse);
      heap.back() = e;
      std::push_heap(heap.begin(), heap.end(), worse);
    }
  });
  Selection sel;
  sel.indices.reserve(heap.size());
  std::sort(heap.begin(), heap.end(),
            [](const Entry& a, const Entry& b) { return a.second < b.second; });
  KahanSum bound;
  for (const Entry& e : heap) {
    sel.indices.push_back(e.second);
    bound.add(e.first);
  }
  sel.union_bound = bound.value();
  return sel;
}

GapMetrics gap_metrics(const ChannelProfile& p, const ScalingQuery& query, double eps) {
  const double n_channels = static_cast<double>(p.rates.size());
  const double threshold = std::pow(n_channels, -query.gamma);
  std::uint64_t good = 0;
  for (double r : p.rates)
    if (r <= threshold) ++good;
  GapMetrics g;
  g.good_fraction = static_cast<double>(good) / n_channels;
  g.gap = (1.0 - eps) - g.good_fraction;
  g.bound = lyapunov::theorem1_bound(p.q, p.n, query.gamma, query.beta);
  return g;
}

double sample_chain(std::uint32_t q, std::uint32_t n, double x0, Rng& rng) {
  check_prob(x0, "chain start x0");
  double x = x0;
  for (std::uint32_t step = 0; step < n; ++step) {
    auto i = static_cast<std::uint32_t>(rng.below(q));
    x = BinomialTails(q, Prob::of(x)).child(i).p;
  }
  return x;
}

double interval_fraction(std::uint32_t q, std::uint32_t n, double eps, double lo, double hi) {
  std::uint64_t inside = 0, total = 0;
  profile_stream(q, n, eps, [&](std::uint64_t, double rate) {
    ++total;
    if (rate >= lo && rate <= hi) ++inside;
  });
  return static_cast<double>(inside) / static_cast<double>(total);
}

std::vector<std::uint64_t> histogram(std::uint32_t q, std::uint32_t n, double eps,
                                     std::size_t bins) {
  require(bins >= 1, "histogram needs at least one bin");
  std::vector<std::uint64_t> counts(bins, 0);
  profile_stream(q, n, eps, [&](std::uint64_t, double rate) {
    auto b = static_cast<std::size_t>(rate * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;
    ++counts[b];
  });
  return counts;
}

}  // namespace polarscale::de
