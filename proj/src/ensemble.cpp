#include "polarscale/ensemble.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "polarscale/detail/supsearch.hpp"
#include "polarscale/gf.hpp"

namespace polarscale::ensemble {
namespace {

bool is_prime_power(std::uint32_t q) {
  if (q < 2) return false;
  std::uint32_t p = q;
  for (std::uint32_t d = 2; d * d <= q; ++d)
    if (q % d == 0) {
      p = d;
      break;
    }
  std::uint64_t acc = p;
  while (acc < q) acc *= p;
  return acc == q;
}

BigInt q_pow(std::uint32_t q, std::uint64_t e) {
  BigInt z;
  mpz_ui_pow_ui(z.get_mpz_t(), q, e);
  return z;
}

// Shared precomputation for the rho closed form at fixed (m, q).
struct RhoCalc {
  std::uint32_t m, q;
  std::vector<BigInt> qp;                  // q^t for t <= m*m
  std::vector<std::vector<BigInt>> phi;    // phi[j][i], j,i <= m
  std::vector<std::vector<BigInt>> gauss;  // gauss[k][j], k,j <= m

  RhoCalc(std::uint32_t m_in, std::uint32_t q_in) : m(m_in), q(q_in) {
    qp.resize(static_cast<std::size_t>(m) * m + 1);
    qp[0] = 1;
    for (std::size_t t = 1; t < qp.size(); ++t) qp[t] = qp[t - 1] * q;
    phi.assign(m + 1, std::vector<BigInt>(m + 1));
    gauss.assign(m + 1, std::vector<BigInt>(m + 1));
    for (std::uint32_t i = 0; i <= m; ++i)
      for (std::uint32_t j = 0; j <= m; ++j) {
        phi[j][i] = phi_count(j, i, q);
        gauss[i][j] = gaussian_binomial(i, j, q);
      }
  }

  // rho(m, i, d, q) as a single integer sum over a common denominator
  // (q^(m-i) - 1) * phi(m-i, m, q); one rational canonicalization per cell.
  Rational cell(std::uint32_t i, std::uint32_t d) const {
    const std::uint32_t k = m - i;
    BigInt numer = 0;
    const std::uint32_t j_hi = std::min(k, d);
    for (std::uint32_t j = 0; j <= j_hi; ++j) {
      BigInt factor = (qp[k] - qp[j]) * phi[j][d] * gauss[k][j];
      if (factor == 0) continue;
      BigInt inner = 0;
      const std::uint32_t l_lo = (k > j) ? k - j : 0;
      const std::uint32_t l_hi = std::min(k, m - d);
      for (std::uint32_t l = l_lo; l <= l_hi; ++l)
        inner += phi[l][m - d] * qp[static_cast<std::size_t>(k - j) * (k - l)] * gauss[j][k - l];
      numer += factor * inner;
    }
    Rational r(numer, (qp[k] - 1) * phi[k][m]);
    r.canonicalize();
    return r;
  }
};

std::size_t worker_count(std::size_t cells) {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("POLARSCALE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) n = static_cast<std::size_t>(v);
  }
  return std::min(n, cells);
}

double interp_uniform(const std::vector<double>& ys, double x) {
  const auto n = ys.size();
  double pos = x * static_cast<double>(n - 1);
  if (pos <= 0.0) return ys.front();
  if (pos >= static_cast<double>(n - 1)) return ys.back();
  auto idx = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(idx);
  return ys[idx] + frac * (ys[idx + 1] - ys[idx]);
}

}  // namespace

BigInt gaussian_binomial(std::int64_t k, std::int64_t j, std::uint32_t q) {
  require(q >= 2, "gaussian binomial needs q >= 2");
  if (j < 0 || k < 0 || j > k) return 0;
  BigInt num = 1, den = 1;
  for (std::int64_t l = 0; l < j; ++l) {
    num *= q_pow(q, k) - q_pow(q, l);
    den *= q_pow(q, j) - q_pow(q, l);
  }
  BigInt out;
  mpz_divexact(out.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return out;
}

BigInt phi_count(std::int64_t j, std::int64_t i, std::uint32_t q) {
  require(q >= 2, "phi_count needs q >= 2");
  if (j < 0 || i < 0) return 0;
  BigInt out = 1;
  for (std::int64_t l = 0; l < j; ++l) out *= q_pow(q, i) - q_pow(q, l);
  return out;
}

Rational rank_dist(std::uint32_t k, std::uint32_t d, std::uint32_t q, std::uint32_t j) {
  Rational r(phi_count(j, d, q) * gaussian_binomial(k, j, q), q_pow(q, std::uint64_t{k} * d));
  r.canonicalize();
  return r;
}

Rational theta(std::uint32_t m, std::uint32_t k, std::uint32_t d, std::uint32_t r,
               std::uint32_t j, std::uint32_t q) {
  require(d <= m, "theta: |S| = d must be <= m");
  BigInt numer = 0;
  if (j <= r && r <= k && j <= d) {
    BigInt inner = 0;
    for (std::uint32_t l = 0; l <= r; ++l) {
      BigInt term = phi_count(l, m - d, q) *
                    q_pow(q, static_cast<std::uint64_t>(r - j) * (r - l)) *
                    gaussian_binomial(j, static_cast<std::int64_t>(r) - l, q) *
                    gaussian_binomial(static_cast<std::int64_t>(k) - j,
                                      static_cast<std::int64_t>(k) - r, q);
      inner += term;
    }
    numer = phi_count(j, d, q) * gaussian_binomial(k, j, q) * inner;
  }
  Rational out(numer, q_pow(q, std::uint64_t{k} * m));
  out.canonicalize();
  return out;
}

Rational rho(std::uint32_t m, std::uint32_t i, std::uint32_t d, std::uint32_t q) {
  require(m >= 1 && i < m && d <= m, "rho: need i in [0,m) and d in [0,m]");
  require(is_prime_power(q), "rho: q must be a prime power");
  return RhoCalc(m, q).cell(i, d);
}

RhoTable::RhoTable(std::uint32_t m, std::uint32_t q) : m_(m), q_(q) {
  require(m >= 1, "RhoTable needs m >= 1");
  require(is_prime_power(q), "RhoTable: q must be a prime power");
  const RhoCalc calc(m, q);
  const std::size_t cells = static_cast<std::size_t>(m) * (m + 1);
  rho_.assign(cells, Rational());
  const std::size_t workers = worker_count(cells);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t cell = w; cell < cells; cell += workers) {
        std::uint32_t i = static_cast<std::uint32_t>(cell / (m_ + 1));
        std::uint32_t d = static_cast<std::uint32_t>(cell % (m_ + 1));
        rho_[cell] = calc.cell(i, d);
      }
    });
  for (auto& t : pool) t.join();
  fill_doubles();
}

void RhoTable::fill_doubles() {
  rho_d_.resize(rho_.size());
  for (std::size_t c = 0; c < rho_.size(); ++c) rho_d_[c] = rho_[c].get_d();
}

const Rational& RhoTable::at(std::uint32_t i, std::uint32_t d) const {
  require(i < m_ && d <= m_, "RhoTable::at out of range");
  return rho_[static_cast<std::size_t>(i) * (m_ + 1) + d];
}

void RhoTable::store(std::ostream& os) const {
  os << m_ << ' ' << q_ << '\n';
  for (std::uint32_t i = 0; i < m_; ++i)
    for (std::uint32_t d = 0; d <= m_; ++d) {
      const Rational& r = at(i, d);
      os << i << ' ' << d << ' ' << r.get_num().get_str() << '/' << r.get_den().get_str()
         << '\n';
    }
}

void RhoTable::store_file(const std::string& path) const {
  std::ofstream os(path);
  require(os.good(), "cannot write rho cache file " + path);
  store(os);
}

RhoTable RhoTable::load(std::istream& is) {
  RhoTable t;
  if (!(is >> t.m_ >> t.q_) || t.m_ < 1)
    throw PreconditionError("rho cache: malformed header");
  t.rho_.assign(static_cast<std::size_t>(t.m_) * (t.m_ + 1), Rational());
  std::vector<bool> seen(t.rho_.size(), false);
  std::uint32_t i = 0, d = 0;
  std::string frac;
  for (std::size_t line = 0; line < t.rho_.size(); ++line) {
    if (!(is >> i >> d >> frac))
      throw PreconditionError("rho cache: truncated file");
    if (i >= t.m_ || d > t.m_)
      throw PreconditionError("rho cache: cell index out of range");
    auto slash = frac.find('/');
    if (slash == std::string::npos)
      throw PreconditionError("rho cache: expected num/den, got '" + frac + "'");
    Rational r(BigInt(frac.substr(0, slash)), BigInt(frac.substr(slash + 1)));
    Rational canon = r;
    canon.canonicalize();
    if (canon.get_num() != r.get_num() || canon.get_den() != r.get_den())
      throw PreconditionError("rho cache: value not in canonical lowest terms");
    std::size_t cell = static_cast<std::size_t>(i) * (t.m_ + 1) + d;
    if (seen[cell]) throw PreconditionError("rho cache: duplicate cell");
    seen[cell] = true;
    t.rho_[cell] = canon;
  }
  t.fill_doubles();
  return t;
}

RhoTable RhoTable::load_file(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open rho cache file " + path);
  return load(is);
}

RhoTable RhoTable::load_or_build(std::uint32_t m, std::uint32_t q, const std::string& cache_dir) {
  if (cache_dir.empty()) return RhoTable(m, q);
  std::filesystem::path dir(cache_dir);
  std::filesystem::path file =
      dir / ("rho_m" + std::to_string(m) + "_q" + std::to_string(q) + ".txt");
  if (std::filesystem::exists(file)) return load_file(file.string());
  RhoTable t(m, q);
  std::filesystem::create_directories(dir);
  // write-then-rename so concurrent builders never observe a torn file
  std::filesystem::path tmp = file;
  tmp += ".tmp." + std::to_string(::getpid());
  t.store_file(tmp.string());
  std::filesystem::rename(tmp, file);
  return t;
}

MonteCarloEstimate rho_mc(std::uint32_t m, std::uint32_t i, std::uint32_t d, std::uint32_t q,
                          std::uint64_t trials, Rng& rng) {
  require(trials >= 1, "rho_mc needs trials >= 1");
  require(m >= 1 && i < m && d <= m, "rho_mc: need i in [0,m) and d in [0,m]");
  auto field = gf::make_field(q);
  const std::uint32_t k = m - i;
  std::vector<std::size_t> all_rows(k), first_d(d);
  for (std::uint32_t r = 0; r < k; ++r) all_rows[r] = r;
  for (std::uint32_t c = 0; c < d; ++c) first_d[c] = c;
  std::vector<std::uint32_t> e1(k, 0);
  e1[0] = 1;
  std::uint64_t hits = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    gf::Matrix g = gf::sample_full_rank(k, m, field, rng);
    if (!gf::in_colspace(e1, g.select(all_rows, first_d))) ++hits;
  }
  MonteCarloEstimate est;
  est.trials = trials;
  est.value = static_cast<double>(hits) / static_cast<double>(trials);
  est.std_error = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(trials));
  return est;
}

std::vector<MonteCarloEstimate> rho_mc_all_d(std::uint32_t m, std::uint32_t i, std::uint32_t q,
                                             std::uint64_t trials, Rng& rng) {
  require(trials >= 1, "rho_mc_all_d needs trials >= 1");
  require(m >= 1 && i < m, "rho_mc_all_d: need i in [0,m)");
  auto field = gf::make_field(q);
  const gf::Field& f = *field;
  const std::uint32_t k = m - i;
  std::vector<std::uint64_t> hits(m + 1, 0);

  // echelonized basis of the column span, grown one column at a time;
  // membership of e_1 is monotone in d, so each sample yields a threshold.
  std::vector<std::vector<std::uint32_t>> basis;
  std::vector<std::uint32_t> pivots, col(k), e1(k);
  auto reduce = [&](std::vector<std::uint32_t>& v) {
    for (std::size_t b = 0; b < basis.size(); ++b) {
      std::uint32_t c = v[pivots[b]];
      if (c == 0) continue;
      for (std::uint32_t r = 0; r < k; ++r) v[r] = f.sub(v[r], f.mul(c, basis[b][r]));
    }
  };
  for (std::uint64_t t = 0; t < trials; ++t) {
    gf::Matrix g = gf::sample_full_rank(k, m, field, rng);
    basis.clear();
    pivots.clear();
    std::uint32_t threshold = m + 1;  // smallest d with e_1 in the span
    for (std::uint32_t d = 1; d <= m && threshold > m; ++d) {
      for (std::uint32_t r = 0; r < k; ++r) col[r] = g(r, d - 1);
      reduce(col);
      std::uint32_t piv = k;
      for (std::uint32_t r = 0; r < k; ++r)
        if (col[r] != 0) {
          piv = r;
          break;
        }
      if (piv < k) {
        std::uint32_t scale = f.inv(col[piv]);
        for (std::uint32_t r = 0; r < k; ++r) col[r] = f.mul(col[r], scale);
        basis.push_back(col);
        pivots.push_back(piv);
      }
      std::fill(e1.begin(), e1.end(), 0);
      e1[0] = 1;
      reduce(e1);
      if (std::all_of(e1.begin(), e1.end(), [](std::uint32_t v) { return v == 0; }))
        threshold = d;
    }
    for (std::uint32_t d = 0; d <= m; ++d)
      if (d < threshold) ++hits[d];
  }

  std::vector<MonteCarloEstimate> out(m + 1);
  for (std::uint32_t d = 0; d <= m; ++d) {
    out[d].trials = trials;
    out[d].value = static_cast<double>(hits[d]) / static_cast<double>(trials);
    out[d].std_error =
        std::sqrt(out[d].value * (1.0 - out[d].value) / static_cast<double>(trials));
  }
  return out;
}

double phi_bar(const RhoTable& table, std::uint32_t i, double x) {
  return phi_bar_pair(table, i, Prob::of(x)).p;
}

Prob phi_bar_pair(const RhoTable& table, std::uint32_t i, Prob x) {
  const std::uint32_t m = table.m();
  require(i < m, "phi_bar: i out of range");
  std::vector<double> xp(m + 1), cp(m + 1);
  xp[0] = cp[0] = 1.0;
  for (std::uint32_t t = 1; t <= m; ++t) {
    xp[t] = xp[t - 1] * x.p;
    cp[t] = cp[t - 1] * x.c;
  }
  double binom = 1.0;
  KahanSum val, comp;
  for (std::uint32_t d = 0; d <= m; ++d) {
    double base = binom * xp[m - d] * cp[d];
    double r = table.at_double(i, d);
    val.add(base * r);
    comp.add(base * (1.0 - r));
    binom *= static_cast<double>(m - d) / static_cast<double>(d + 1);
  }
  return Prob{std::min(1.0, val.value()), std::min(1.0, comp.value())};
}

double GbarSequence::interp_error_estimate(std::size_t k) const {
  const auto& ys = levels.at(k);
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < ys.size(); ++j)
    worst = std::max(worst, std::abs(ys[j + 1] - 2.0 * ys[j] + ys[j - 1]));
  return worst / 8.0;
}

GbarSequence gbar_sequence(const RhoTable& table, double beta, std::uint32_t n,
                           std::size_t grid_points) {
  require(beta > 0.0 && beta < 1.0, "gbar_sequence needs beta in (0,1)");
  require(n >= 1, "gbar_sequence needs n >= 1");
  require(grid_points >= 16, "gbar_sequence needs at least 16 grid points");
  const std::uint32_t m = table.m();
  GbarSequence seq;
  seq.beta = beta;
  seq.xs.resize(grid_points);
  for (std::size_t j = 0; j < grid_points; ++j)
    seq.xs[j] = static_cast<double>(j) / static_cast<double>(grid_points - 1);

  auto v0 = [beta](Prob y) { return std::pow(y.p * y.c, beta); };

  // gbar_1 directly; deeper levels compose through the previous grid.
  std::vector<double> level(grid_points);
  for (std::size_t j = 0; j < grid_points; ++j) {
    Prob x = Prob::of(seq.xs[j]);
    KahanSum s;
    for (std::uint32_t i = 0; i < m; ++i) s.add(v0(phi_bar_pair(table, i, x)));
    level[j] = s.value() / m;
  }
  seq.levels.push_back(level);
  for (std::uint32_t k = 2; k <= n; ++k) {
    const std::vector<double>& prev = seq.levels.back();
    std::vector<double> next(grid_points);
    for (std::size_t j = 0; j < grid_points; ++j) {
      Prob x = Prob::of(seq.xs[j]);
      KahanSum s;
      for (std::uint32_t i = 0; i < m; ++i)
        s.add(interp_uniform(prev, phi_bar_pair(table, i, x).p));
      next[j] = s.value() / m;
    }
    seq.levels.push_back(std::move(next));
  }
  return seq;
}

double gbar_exact(const RhoTable& table, double beta, std::uint32_t k, double x) {
  require(beta > 0.0 && beta < 1.0, "gbar_exact needs beta in (0,1)");
  const std::uint32_t m = table.m();
  auto rec = [&](auto&& self, Prob p, std::uint32_t level) -> double {
    if (level == 0) return std::pow(p.p * p.c, beta);
    KahanSum s;
    for (std::uint32_t i = 0; i < m; ++i) s.add(self(self, phi_bar_pair(table, i, p), level - 1));
    return s.value() / m;
  };
  return rec(rec, Prob::of(x), k);
}

ConcavityReport check_conjecture1(const RhoTable& table, double beta, std::uint32_t n,
                                  std::size_t grid_points) {
  GbarSequence seq = gbar_sequence(table, beta, n, grid_points);
  ConcavityReport rep;
  constexpr double kTol = 1e-9;
  for (std::size_t k = 0; k < seq.levels.size(); ++k) {
    const auto& ys = seq.levels[k];
    for (std::size_t j = 1; j + 1 < ys.size(); ++j) {
      double d2 = ys[j + 1] - 2.0 * ys[j] + ys[j - 1];
      rep.worst_second_difference = std::max(rep.worst_second_difference, d2);
      if (d2 <= kTol) continue;
      bool genuine = true;
      if (k >= 1) {
        // composed interpolants leave O(grid^-2) convex bumps; settle the
        // triple with the exact recursion
        ++rep.exact_rechecks;
        auto level = static_cast<std::uint32_t>(k + 1);
        double exact_d2 = gbar_exact(table, beta, level, seq.xs[j + 1]) -
                          2.0 * gbar_exact(table, beta, level, seq.xs[j]) +
                          gbar_exact(table, beta, level, seq.xs[j - 1]);
        genuine = exact_d2 > kTol;
      }
      if (genuine && rep.concave) {
        rep.concave = false;
        rep.first_violation_level = static_cast<std::uint32_t>(k + 1);
        rep.violation_x = seq.xs[j];
      }
    }
  }
  return rep;
}

ScalingFit check_conjecture2(const std::vector<std::uint32_t>& ms, std::uint32_t q, double beta,
                             const std::string& cache_dir, std::size_t grid_points,
                             double refine_tol) {
  require(ms.size() >= 2, "conjecture-2 regression needs at least two m values");
  ScalingFit fit;
  fit.ms = ms;
  for (std::uint32_t m : ms) {
    RhoTable table = RhoTable::load_or_build(m, q, cache_dir);
    auto ratio = [&](double x) {
      Prob px = Prob::of(x);
      KahanSum s;
      for (std::uint32_t i = 0; i < m; ++i) {
        Prob y = phi_bar_pair(table, i, px);
        s.add(std::pow(y.p * y.c, beta));
      }
      return (s.value() / m) / std::pow(px.p * px.c, beta);
    };
    // phibar duality makes the ratio symmetric about 1/2
    auto sup = detail::sup_search(ratio, 1e-12, 0.5, grid_points, refine_tol);
    fit.lambdas.push_back(sup.sup);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(ms.size());
  for (std::size_t t = 0; t < ms.size(); ++t) {
    double lx = std::log(static_cast<double>(ms[t]));
    double ly = std::log(fit.lambdas[t]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  for (std::size_t t = 0; t < ms.size(); ++t)
    fit.residuals.push_back(std::log(fit.lambdas[t]) -
                            (fit.intercept + fit.slope * std::log(static_cast<double>(ms[t]))));
  return fit;
}

}  // namespace polarscale::ensemble
