#include "polarscale/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace polarscale::kernel {
namespace {

// binomial coefficients up to 2^53, exact for m <= 20
std::vector<std::uint64_t> binomial_row_u64(std::uint32_t m) {
  std::vector<std::uint64_t> c(m + 1, 1);
  for (std::uint32_t d = 1; d <= m; ++d)
    c[d] = c[d - 1] * (m - d + 1) / d;
  return c;
}

}  // namespace

Kernel::Kernel(gf::Matrix g) : g_(std::move(g)) {
  require(g_.rows() == g_.cols() && g_.rows() >= 1, "kernel must be square and non-empty");
  require(gf::rank(g_) == g_.rows(), "kernel must be invertible over its field");
}

Kernel Kernel::row_reversed() const {
  gf::Matrix r(g_.rows(), g_.cols(), g_.field());
  for (std::size_t i = 0; i < g_.rows(); ++i)
    for (std::size_t j = 0; j < g_.cols(); ++j) r(i, j) = g_(g_.rows() - 1 - i, j);
  return Kernel(std::move(r));
}

int erasure_indicator(const Kernel& k, std::uint32_t i, const std::vector<std::uint32_t>& s_cols) {
  const std::uint32_t m = k.m();
  require(i < m, "erasure_indicator: i out of range");
  std::vector<std::size_t> rows, cols;
  for (std::uint32_t r = i; r < m; ++r) rows.push_back(r);
  for (std::uint32_t c : s_cols) {
    require(c < m, "erasure_indicator: column index out of range");
    cols.push_back(c);
  }
  gf::Matrix sub = k.matrix().select(rows, cols);
  std::vector<std::uint32_t> e1(m - i, 0);
  e1[0] = 1;
  return gf::in_colspace(e1, sub) ? 0 : 1;
}

ProfilePolynomial::ProfilePolynomial(std::uint32_t m, std::uint32_t q,
                                     std::vector<std::uint64_t> coeffs)
    : m_(m), q_(q), a_(std::move(coeffs)) {
  require(a_.size() == static_cast<std::size_t>(m_) * (m_ + 1),
          "profile polynomial has m x (m+1) coefficients");
}

double ProfilePolynomial::eval(std::uint32_t i, double x) const {
  return eval_pair(i, Prob::of(x)).p;
}

Prob ProfilePolynomial::eval_pair(std::uint32_t i, Prob x) const {
  require(i < m_, "profile eval: i out of range");
  std::vector<double> xp(m_ + 1), cp(m_ + 1);
  xp[0] = cp[0] = 1.0;
  for (std::uint32_t t = 1; t <= m_; ++t) {
    xp[t] = xp[t - 1] * x.p;
    cp[t] = cp[t - 1] * x.c;
  }
  auto binom = binomial_row_u64(m_);
  KahanSum val, comp;
  for (std::uint32_t d = 0; d <= m_; ++d) {
    double base = xp[m_ - d] * cp[d];
    auto hits = static_cast<double>(at(i, d));
    val.add(base * hits);
    comp.add(base * (static_cast<double>(binom[d]) - hits));
  }
  return Prob{std::min(1.0, val.value()), std::min(1.0, comp.value())};
}

std::vector<std::vector<std::uint64_t>> ProfilePolynomial::rows() const {
  std::vector<std::vector<std::uint64_t>> out(m_);
  for (std::uint32_t i = 0; i < m_; ++i)
    out[i].assign(a_.begin() + i * (m_ + 1), a_.begin() + (i + 1) * (m_ + 1));
  return out;
}

void ProfilePolynomial::store_csv(std::ostream& os) const {
  os << "i,d,a_id\n";
  for (std::uint32_t i = 0; i < m_; ++i)
    for (std::uint32_t d = 0; d <= m_; ++d) os << i << ',' << d << ',' << at(i, d) << '\n';
}

namespace {

// E^(i)(S) for all i in one bottom-up pass: inserting row i on top of the
// echelonized span of rows i+1..m-1 (restricted to S) leaves the rank
// unchanged exactly when symbol i is still erased.
void subset_indicators_bitpacked(const std::vector<std::uint32_t>& row_masks,
                                 std::uint32_t subset, std::vector<std::uint8_t>& erased) {
  const auto m = static_cast<std::uint32_t>(row_masks.size());
  std::uint32_t basis[32] = {0};
  for (std::uint32_t step = 0; step < m; ++step) {
    std::uint32_t i = m - 1 - step;
    std::uint32_t v = row_masks[i] & subset;
    while (v != 0) {
      std::uint32_t pivot = static_cast<std::uint32_t>(std::countr_zero(v));
      if (basis[pivot] == 0) break;
      v ^= basis[pivot];
    }
    erased[i] = (v == 0) ? 1 : 0;
    if (v != 0) basis[std::countr_zero(v)] = v;
  }
}

void subset_indicators_generic(const gf::Field& f, const gf::Matrix& g, std::uint32_t subset,
                               std::vector<std::uint32_t>& scratch,
                               std::vector<std::uint8_t>& erased) {
  const auto m = static_cast<std::uint32_t>(g.rows());
  std::vector<std::uint32_t> cols;
  for (std::uint32_t c = 0; c < m; ++c)
    if (subset & (1u << c)) cols.push_back(c);
  const auto width = static_cast<std::uint32_t>(cols.size());
  // echelon rows stored consecutively in scratch with their pivot columns
  std::vector<std::uint32_t> pivots;
  scratch.assign(static_cast<std::size_t>(m) * width, 0);
  std::uint32_t basis_rows = 0;
  std::vector<std::uint32_t> v(width);
  for (std::uint32_t step = 0; step < m; ++step) {
    std::uint32_t i = m - 1 - step;
    for (std::uint32_t c = 0; c < width; ++c) v[c] = g(i, cols[c]);
    for (std::uint32_t b = 0; b < basis_rows; ++b) {
      std::uint32_t lead = v[pivots[b]];
      if (lead == 0) continue;
      const std::uint32_t* row = &scratch[static_cast<std::size_t>(b) * width];
      for (std::uint32_t c = 0; c < width; ++c) v[c] = f.sub(v[c], f.mul(lead, row[c]));
    }
    std::uint32_t pivot = width;
    for (std::uint32_t c = 0; c < width; ++c)
      if (v[c] != 0) {
        pivot = c;
        break;
      }
    if (pivot == width) {
      erased[i] = 1;
      continue;
    }
    erased[i] = 0;
    std::uint32_t inv = f.inv(v[pivot]);
    std::uint32_t* row = &scratch[static_cast<std::size_t>(basis_rows) * width];
    for (std::uint32_t c = 0; c < width; ++c) row[c] = f.mul(v[c], inv);
    pivots.push_back(pivot);
    ++basis_rows;
  }
}

}  // namespace

ProfilePolynomial profile_poly(const Kernel& k, std::uint32_t subset_cap) {
  const std::uint32_t m = k.m();
  if (m > subset_cap)
    throw PreconditionError("profile_poly enumerates 2^m subsets and m = " + std::to_string(m) +
                            " exceeds the cap of " + std::to_string(subset_cap) +
                            "; use phi_mc instead");
  const gf::Matrix& g = k.matrix();
  const bool binary = (k.q() == 2);
  std::vector<std::uint32_t> row_masks(m, 0);
  if (binary)
    for (std::uint32_t r = 0; r < m; ++r)
      for (std::uint32_t c = 0; c < m; ++c)
        if (g(r, c)) row_masks[r] |= (1u << c);

  std::vector<std::uint64_t> coeffs(static_cast<std::size_t>(m) * (m + 1), 0);
  std::vector<std::uint8_t> erased(m);
  std::vector<std::uint32_t> scratch;
  const std::uint64_t total = 1ull << m;
  for (std::uint64_t subset = 0; subset < total; ++subset) {
    auto s = static_cast<std::uint32_t>(subset);
    if (binary)
      subset_indicators_bitpacked(row_masks, s, erased);
    else
      subset_indicators_generic(*g.field(), g, s, scratch, erased);
    auto d = static_cast<std::uint32_t>(std::popcount(s));
    for (std::uint32_t i = 0; i < m; ++i)
      if (erased[i]) ++coeffs[static_cast<std::size_t>(i) * (m + 1) + d];
  }
  return ProfilePolynomial(m, k.q(), std::move(coeffs));
}

MonteCarloEstimate phi_mc(const Kernel& k, std::uint32_t i, double x, std::uint64_t trials,
                          Rng& rng) {
  require(trials >= 1, "phi_mc needs trials >= 1");
  require(x >= 0.0 && x <= 1.0, "phi_mc: x must lie in [0,1]");
  const std::uint32_t m = k.m();
  require(i < m, "phi_mc: i out of range");
  std::uint64_t erased_count = 0;
  std::vector<std::uint32_t> received;
  for (std::uint64_t t = 0; t < trials; ++t) {
    received.clear();
    for (std::uint32_t c = 0; c < m; ++c)
      if (rng.real01() >= x) received.push_back(c);
    erased_count += static_cast<std::uint64_t>(erasure_indicator(k, i, received));
  }
  MonteCarloEstimate est;
  est.trials = trials;
  est.value = static_cast<double>(erased_count) / static_cast<double>(trials);
  est.std_error = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(trials));
  return est;
}

Kernel arikan_tensor(std::uint32_t levels) {
  require(levels >= 1, "arikan_tensor needs levels >= 1");
  auto f2 = gf::make_field(2);
  gf::Matrix f(2, 2, f2);
  f(0, 0) = 1;
  f(1, 0) = 1;
  f(1, 1) = 1;
  gf::Matrix acc = f;
  for (std::uint32_t l = 1; l < levels; ++l) acc = gf::kronecker(acc, f);
  return Kernel(std::move(acc));
}

Kernel vandermonde(std::uint32_t q) {
  require(q >= 2, "vandermonde needs q >= 2");
  auto field = gf::make_field(q);
  gf::Matrix v(q, q, field);
  for (std::uint32_t r = 0; r < q; ++r)
    for (std::uint32_t c = 0; c < q; ++c) v(r, c) = field->pow(c, q - 1 - r);
  return Kernel(std::move(v));
}

bool rs_profile_matches(const ProfilePolynomial& p) {
  const std::uint32_t m = p.m();
  auto binom = binomial_row_u64(m);
  // psi_i in the received-count basis: C(m, m-d) for d <= m-1-i, else 0
  std::vector<std::vector<std::uint64_t>> expected(m, std::vector<std::uint64_t>(m + 1, 0));
  for (std::uint32_t i = 0; i < m; ++i)
    for (std::uint32_t d = 0; d + i + 1 <= m; ++d) expected[i][d] = binom[m - d];
  auto actual = p.rows();
  std::sort(expected.begin(), expected.end());
  std::sort(actual.begin(), actual.end());
  return expected == actual;
}

Kernel load(std::istream& is) {
  std::string header;
  while (std::getline(is, header)) {
    if (!header.empty() && header.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  std::istringstream hs(header);
  std::uint32_t q = 0, m = 0;
  require(static_cast<bool>(hs >> q >> m), "kernel file: malformed header (want 'q m [modulus]')");
  std::vector<std::uint32_t> modulus;
  std::uint32_t coeff;
  while (hs >> coeff) modulus.push_back(coeff);
  gf::FieldPtr field = modulus.empty() ? gf::make_field(q) : gf::make_field(q, modulus);
  require(m >= 1, "kernel file: m must be >= 1");
  gf::Matrix g(m, m, field);
  for (std::uint32_t r = 0; r < m; ++r)
    for (std::uint32_t c = 0; c < m; ++c) {
      std::int64_t v;
      require(static_cast<bool>(is >> v), "kernel file: truncated matrix");
      require(v >= 0 && v < static_cast<std::int64_t>(q),
              "kernel file: entry out of range [0, q)");
      g(r, c) = static_cast<std::uint32_t>(v);
    }
  return Kernel(std::move(g));
}

Kernel load_file(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open kernel file " + path);
  return load(is);
}

void store(const Kernel& k, std::ostream& os) {
  os << k.q() << ' ' << k.m();
  for (std::uint32_t c : k.matrix().field()->modulus()) os << ' ' << c;
  os << '\n';
  for (std::uint32_t r = 0; r < k.m(); ++r) {
    for (std::uint32_t c = 0; c < k.m(); ++c) os << (c ? " " : "") << k.matrix()(r, c);
    os << '\n';
  }
}

void store_file(const Kernel& k, const std::string& path) {
  std::ofstream os(path);
  require(os.good(), "cannot write kernel file " + path);
  store(k, os);
}

}  // namespace polarscale::kernel
