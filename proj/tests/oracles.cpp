#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracles {

using polarscale::gf::FieldPtr;
using polarscale::gf::Matrix;

mpq_class psi_exact(std::uint32_t q, std::uint32_t i, const mpq_class& x) {
  mpq_class one_minus = 1 - x;
  mpq_class sum = 0;
  for (std::uint32_t j = i + 1; j <= q; ++j) {
    mpz_class binom;
    mpz_bin_uiui(binom.get_mpz_t(), q, j);
    mpq_class term(binom);
    for (std::uint32_t t = 0; t < j; ++t) term *= x;
    for (std::uint32_t t = 0; t < q - j; ++t) term *= one_minus;
    sum += term;
  }
  sum.canonicalize();
  return sum;
}

mpq_class chain_exact(std::uint32_t q, const std::vector<std::uint32_t>& branch,
                      const mpq_class& eps) {
  mpq_class x = eps;
  for (std::uint32_t i : branch) x = psi_exact(q, i, x);
  return x;
}

bool in_colspace_exhaustive(const std::vector<std::uint32_t>& v, const Matrix& m) {
  const auto& f = *m.field();
  const std::uint32_t q = f.q();
  const std::size_t cols = m.cols();
  std::vector<std::uint32_t> w(cols, 0);
  while (true) {
    std::vector<std::uint32_t> prod(m.rows(), 0);
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < cols; ++c)
        prod[r] = f.add(prod[r], f.mul(m(r, c), w[c]));
    if (prod == v) return true;
    // next coefficient vector in base q
    std::size_t pos = 0;
    while (pos < cols && ++w[pos] == q) {
      w[pos] = 0;
      ++pos;
    }
    if (pos == cols) return false;
  }
}

std::vector<Matrix> enumerate_full_rank(std::size_t rows, std::size_t cols,
                                        const FieldPtr& field) {
  const std::uint32_t q = field->q();
  const std::size_t entries = rows * cols;
  double total = std::pow(static_cast<double>(q), static_cast<double>(entries));
  if (total > 5e6) throw std::runtime_error("enumerate_full_rank: instance too large");
  std::vector<Matrix> out;
  std::vector<std::uint32_t> digits(entries, 0);
  while (true) {
    Matrix m(rows, cols, field);
    for (std::size_t e = 0; e < entries; ++e) m(e / cols, e % cols) = digits[e];
    if (polarscale::gf::rank(m) == rows) out.push_back(m);
    std::size_t pos = 0;
    while (pos < entries && ++digits[pos] == q) {
      digits[pos] = 0;
      ++pos;
    }
    if (pos == entries) break;
  }
  return out;
}

mpq_class rho_enumerate(std::uint32_t m, std::uint32_t i, std::uint32_t d, std::uint32_t q) {
  auto field = polarscale::gf::make_field(q);
  auto all = enumerate_full_rank(m - i, m, field);
  std::vector<std::size_t> rows(m - i), first_d(d);
  for (std::uint32_t r = 0; r < m - i; ++r) rows[r] = r;
  for (std::uint32_t c = 0; c < d; ++c) first_d[c] = c;
  std::vector<std::uint32_t> e1(m - i, 0);
  e1[0] = 1;
  std::uint64_t outside = 0;
  for (const Matrix& g : all)
    if (!polarscale::gf::in_colspace(e1, g.select(rows, first_d))) ++outside;
  mpq_class r(static_cast<unsigned long>(outside), static_cast<unsigned long>(all.size()));
  r.canonicalize();
  return r;
}

mpq_class theta_enumerate(std::uint32_t m, std::uint32_t k, std::uint32_t d, std::uint32_t r,
                          std::uint32_t j, std::uint32_t q) {
  auto field = polarscale::gf::make_field(q);
  const std::size_t entries = static_cast<std::size_t>(k) * m;
  double total = std::pow(static_cast<double>(q), static_cast<double>(entries));
  if (total > 5e6) throw std::runtime_error("theta_enumerate: instance too large");
  std::vector<std::size_t> all_rows(k), first_d(d);
  for (std::uint32_t t = 0; t < k; ++t) all_rows[t] = t;
  for (std::uint32_t c = 0; c < d; ++c) first_d[c] = c;
  std::vector<std::uint32_t> digits(entries, 0);
  std::uint64_t hits = 0, count = 0;
  while (true) {
    Matrix g(k, m, field);
    for (std::size_t e = 0; e < entries; ++e) g(e / m, e % m) = digits[e];
    ++count;
    if (polarscale::gf::rank(g.select(all_rows, first_d)) == j &&
        polarscale::gf::rank(g) == r)
      ++hits;
    std::size_t pos = 0;
    while (pos < entries && ++digits[pos] == q) {
      digits[pos] = 0;
      ++pos;
    }
    if (pos == entries) break;
  }
  mpq_class out(static_cast<unsigned long>(hits), static_cast<unsigned long>(count));
  out.canonicalize();
  return out;
}

mpq_class bernstein_eval_exact(const std::vector<std::uint64_t>& a, const mpq_class& x) {
  const std::size_t m = a.size() - 1;
  mpq_class one_minus = 1 - x;
  mpq_class sum = 0;
  for (std::size_t d = 0; d <= m; ++d) {
    mpq_class term(static_cast<unsigned long>(a[d]));
    for (std::size_t t = 0; t < m - d; ++t) term *= x;
    for (std::size_t t = 0; t < d; ++t) term *= one_minus;
    sum += term;
  }
  sum.canonicalize();
  return sum;
}

}  // namespace oracles
