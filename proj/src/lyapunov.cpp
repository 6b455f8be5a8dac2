#include "polarscale/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "polarscale/detail/supsearch.hpp"

namespace polarscale::lyapunov {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// PolarOperator

struct PolarOperator::Impl {
  enum class Kind { Rs, Fixed, EnsembleAvg } kind = Kind::Rs;
  std::uint32_t q = 2;                       // Rs
  std::shared_ptr<const kernel::ProfilePolynomial> poly;  // Fixed
  std::shared_ptr<const ensemble::RhoTable> table;        // EnsembleAvg
  bool symmetric = true;
  std::string name;

  std::uint32_t arity() const {
    switch (kind) {
      case Kind::Rs:
        return q;
      case Kind::Fixed:
        return poly->m();
      case Kind::EnsembleAvg:
        return table->m();
    }
    return 0;
  }

  void children(Prob x, std::vector<Prob>& out) const {
    const std::uint32_t m = arity();
    out.resize(m);
    switch (kind) {
      case Kind::Rs: {
        de::BinomialTails bt(q, x);
        for (std::uint32_t i = 0; i < m; ++i) out[i] = bt.child(i);
        break;
      }
      case Kind::Fixed:
        for (std::uint32_t i = 0; i < m; ++i) out[i] = poly->eval_pair(i, x);
        break;
      case Kind::EnsembleAvg:
        for (std::uint32_t i = 0; i < m; ++i) out[i] = ensemble::phi_bar_pair(*table, i, x);
        break;
    }
  }
};

PolarOperator PolarOperator::rs(std::uint32_t q) {
  require(q >= 2, "rs operator needs q >= 2");
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Rs;
  impl->q = q;
  impl->symmetric = true;  // psi_i(x) = 1 - psi_{q-1-i}(1-x)
  impl->name = "rs(q=" + std::to_string(q) + ")";
  return PolarOperator{std::move(impl)};
}

PolarOperator PolarOperator::fixed(kernel::ProfilePolynomial poly, std::string name) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Fixed;
  impl->poly = std::make_shared<const kernel::ProfilePolynomial>(std::move(poly));
  // complement duality is a property of the particular kernel: detect it
  // from the exact coefficients, a[i][d] + a[m-1-i][m-d] == C(m,d)
  const auto& p = *impl->poly;
  const std::uint32_t m = p.m();
  std::vector<std::uint64_t> binom(m + 1, 1);
  for (std::uint32_t d = 1; d <= m; ++d) binom[d] = binom[d - 1] * (m - d + 1) / d;
  impl->symmetric = true;
  for (std::uint32_t i = 0; i < m && impl->symmetric; ++i)
    for (std::uint32_t d = 0; d <= m; ++d)
      if (p.at(i, d) + p.at(m - 1 - i, m - d) != binom[d]) {
        impl->symmetric = false;
        break;
      }
  impl->name = name.empty()
                   ? "kernel(m=" + std::to_string(m) + ",q=" + std::to_string(p.q()) + ")"
                   : std::move(name);
  return PolarOperator{std::move(impl)};
}

PolarOperator PolarOperator::fixed(const kernel::Kernel& k, std::string name) {
  return fixed(kernel::profile_poly(k), std::move(name));
}

PolarOperator PolarOperator::ensemble_avg(ensemble::RhoTable table) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::EnsembleAvg;
  impl->symmetric = true;  // rho duality: 1 - phibar_i(x) = phibar_{m-1-i}(1-x)
  impl->name =
      "ensemble(m=" + std::to_string(table.m()) + ",q=" + std::to_string(table.q()) + ")";
  impl->table = std::make_shared<const ensemble::RhoTable>(std::move(table));
  return PolarOperator{std::move(impl)};
}

std::uint32_t PolarOperator::arity() const { return impl->arity(); }
bool PolarOperator::symmetric() const { return impl->symmetric; }
void PolarOperator::children(Prob x, std::vector<Prob>& out) const { impl->children(x, out); }
std::string PolarOperator::describe() const { return impl->name; }

// ---------------------------------------------------------------------------
// LyapunovFn

struct LyapunovFn::Impl {
  enum class Kind { Power, Identity, Iterated, Grid } kind = Kind::Power;
  double beta = 0.5;  // Power

  // Iterated (recursive form)
  std::shared_ptr<const Impl> base;
  std::shared_ptr<const PolarOperator::Impl> op;
  std::uint32_t depth = 0;

  // Grid (also the cache for deep iterates)
  std::vector<double> xs, ys;

  bool symmetric = true;
  double root_beta = kNaN;
  std::string name;

  double eval(Prob x) const {
    switch (kind) {
      case Kind::Power:
        return std::pow(x.p * x.c, beta);
      case Kind::Identity:
        return x.p;
      case Kind::Iterated:
        return eval_iterated(x, depth);
      case Kind::Grid:
        return interp(x.p);
    }
    return 0.0;
  }

  double eval_iterated(Prob x, std::uint32_t levels) const {
    if (levels == 0) return base->eval(x);
    std::vector<Prob> kids;
    op->children(x, kids);
    KahanSum s;
    for (const Prob& child : kids) s.add(eval_iterated(child, levels - 1));
    return s.value() / static_cast<double>(kids.size());
  }

  double interp(double x) const {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    std::size_t lo = hi - 1;
    double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
  }

  double grid_error() const {
    if (kind != Kind::Grid) return 0.0;
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < ys.size(); ++j)
      worst = std::max(worst, std::abs(ys[j + 1] - 2.0 * ys[j] + ys[j - 1]));
    return worst / 8.0;
  }
};

LyapunovFn LyapunovFn::power(double beta) {
  require(beta > 0.0 && beta < 1.0, "power test function needs beta in (0,1)");
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Power;
  impl->beta = beta;
  impl->root_beta = beta;
  impl->symmetric = true;
  impl->name = "power(beta=" + std::to_string(beta) + ")";
  return LyapunovFn{std::move(impl)};
}

LyapunovFn LyapunovFn::identity() {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Identity;
  impl->symmetric = false;
  impl->name = "identity";
  return LyapunovFn{std::move(impl)};
}

LyapunovFn LyapunovFn::iterated(LyapunovFn base, PolarOperator op, std::uint32_t depth) {
  require(depth >= 1, "iterated test function needs depth >= 1");
  const double cost = std::pow(static_cast<double>(op.arity()), static_cast<double>(depth));
  auto impl = std::make_shared<Impl>();
  impl->symmetric = base.symmetric() && op.symmetric();
  impl->root_beta = base.beta();
  impl->name = "iterate(" + base.describe() + ", " + op.describe() +
               ", depth=" + std::to_string(depth) + ")";
  if (cost <= 64.0) {
    impl->kind = Impl::Kind::Iterated;
    impl->base = base.impl;
    impl->op = op.impl;
    impl->depth = depth;
    return LyapunovFn{std::move(impl)};
  }
  // deep iterate: build level by level on a dense grid
  constexpr std::size_t kCachePoints = 100'000;
  std::vector<double> xs(kCachePoints), cur(kCachePoints), next(kCachePoints);
  for (std::size_t j = 0; j < kCachePoints; ++j) {
    xs[j] = static_cast<double>(j) / static_cast<double>(kCachePoints - 1);
    cur[j] = base.eval(Prob::of(xs[j]));
  }
  Impl level;
  level.kind = Impl::Kind::Grid;
  level.xs = xs;
  std::vector<Prob> kids;
  for (std::uint32_t lv = 0; lv < depth; ++lv) {
    level.ys = cur;
    for (std::size_t j = 0; j < kCachePoints; ++j) {
      op.children(Prob::of(xs[j]), kids);
      KahanSum s;
      for (const Prob& child : kids) s.add(level.interp(child.p));
      next[j] = s.value() / static_cast<double>(kids.size());
    }
    std::swap(cur, next);
  }
  impl->kind = Impl::Kind::Grid;
  impl->xs = std::move(xs);
  impl->ys = std::move(cur);
  return LyapunovFn{std::move(impl)};
}

LyapunovFn LyapunovFn::grid(std::vector<double> xs, std::vector<double> ys) {
  require(xs.size() >= 2 && xs.size() == ys.size(), "grid function needs matching xs/ys");
  require(std::is_sorted(xs.begin(), xs.end()), "grid xs must be sorted");
  require(xs.front() >= 0.0 && xs.back() <= 1.0, "grid xs must lie in [0,1]");
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Grid;
  // symmetric iff the sampled values mirror about 1/2 on a mirrored grid
  impl->symmetric = true;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    std::size_t r = xs.size() - 1 - j;
    if (std::abs((xs[j] + xs[r]) - 1.0) > 1e-12 || std::abs(ys[j] - ys[r]) > 1e-12) {
      impl->symmetric = false;
      break;
    }
  }
  impl->xs = std::move(xs);
  impl->ys = std::move(ys);
  impl->name = "grid(" + std::to_string(impl->xs.size()) + " points)";
  return LyapunovFn{std::move(impl)};
}

double LyapunovFn::operator()(double x) const { return impl->eval(Prob::of(x)); }
double LyapunovFn::eval(Prob x) const { return impl->eval(x); }
bool LyapunovFn::symmetric() const { return impl->symmetric; }
double LyapunovFn::beta() const { return impl->root_beta; }
double LyapunovFn::grid_error() const { return impl->grid_error(); }
std::string LyapunovFn::describe() const { return impl->name; }

// ---------------------------------------------------------------------------
// lambda search

double apply_operator(const PolarOperator& op, const LyapunovFn& v, Prob x) {
  std::vector<Prob> kids;
  op.children(x, kids);
  KahanSum s;
  for (const Prob& child : kids) s.add(v.eval(child));
  return s.value() / static_cast<double>(kids.size());
}

double apply_operator(const PolarOperator& op, const LyapunovFn& v, double x) {
  require(x >= 0.0 && x <= 1.0, "apply_operator: x must lie in [0,1]");
  return apply_operator(op, v, Prob::of(x));
}

double contraction_ratio(const PolarOperator& op, const LyapunovFn& v, double x) {
  Prob px = Prob::of(x);
  double den = v.eval(px);
  if (den <= 0.0) return -std::numeric_limits<double>::infinity();
  return apply_operator(op, v, px) / den;
}

namespace {

LambdaReport run_sup(const std::function<double(double)>& ratio, bool symmetric,
                     std::size_t grid_points, double refine_tol, double beta,
                     std::string op_name) {
  require(grid_points >= 64, "lambda search needs at least 64 grid points");
  const double hi = symmetric ? 0.5 : 1.0 - kBoundaryEps;
  auto res = detail::sup_search(ratio, kBoundaryEps, hi, grid_points, refine_tol);
  LambdaReport rep;
  rep.lambda = res.sup;
  rep.argmax_x = res.argmax;
  rep.grid_points = grid_points;
  rep.refine_tol = refine_tol;
  rep.beta = beta;
  rep.op = std::move(op_name);
  rep.grid_lambda = res.grid_sup;
  rep.refined_lambda = res.refined_sup;
  rep.symmetric_search = symmetric;
  return rep;
}

}  // namespace

LambdaReport lambda_sup(const PolarOperator& op, const LyapunovFn& v, std::size_t grid_points,
                        double refine_tol) {
  auto ratio = [&](double x) { return contraction_ratio(op, v, x); };
  return run_sup(ratio, op.symmetric() && v.symmetric(), grid_points, refine_tol, v.beta(),
                 op.describe());
}

LambdaReport sup_ratio(const LyapunovFn& num, const LyapunovFn& den, std::size_t grid_points,
                       double refine_tol) {
  auto ratio = [&](double x) {
    Prob px = Prob::of(x);
    double d = den.eval(px);
    if (d <= 0.0) return -std::numeric_limits<double>::infinity();
    return num.eval(px) / d;
  };
  return run_sup(ratio, num.symmetric() && den.symmetric(), grid_points, refine_tol, den.beta(),
                 num.describe() + " / " + den.describe());
}

LambdaReport lambda_kernel(const kernel::Kernel& k, double beta, std::size_t grid_points,
                           double refine_tol) {
  return lambda_sup(PolarOperator::fixed(k), LyapunovFn::power(beta), grid_points, refine_tol);
}

// ---------------------------------------------------------------------------
// closed-form bounds

double lemma2_bound(std::uint32_t q, double beta) {
  require(q >= 2, "lemma2_bound needs q >= 2");
  require(beta > 0.0 && beta <= 0.5, "lemma2_bound needs beta in (0, 1/2]");
  return 6.0 / std::sqrt(static_cast<double>(q) * beta) * std::pow(0.25, 0.5 - beta);
}

double theorem1_exponent(double q, double gamma, double beta) {
  require(q >= 2.0, "theorem1 bound needs q >= 2");
  require(gamma > 0.0, "theorem1 bound needs gamma > 0");
  require(beta > 0.0 && beta <= 0.5, "theorem1 bound needs beta in (0, 1/2]");
  return gamma * beta - 0.5 +
         (std::log(6.0) - 0.5 * std::log(beta) + (beta - 0.5) * std::log(4.0)) / std::log(q);
}

double theorem1_bound(double q, std::uint32_t n, double gamma, double beta) {
  double exponent = theorem1_exponent(q, gamma, beta);
  const double ln_n_total = static_cast<double>(n) * std::log(q);
  const double eta = std::exp(-gamma * ln_n_total);  // N^-gamma
  require(eta <= 0.75, "theorem1 hypothesis N^-gamma <= 3/4 violated (N^-gamma = " +
                           std::to_string(eta) + ")");
  return std::exp(exponent * ln_n_total);
}

double theorem1_bound_onesided(double q, std::uint32_t n, double gamma, double beta, double x) {
  require(x >= 0.0 && x <= 1.0, "theorem1 one-sided bound needs x in [0,1]");
  const double ln_n_total = static_cast<double>(n) * std::log(q);
  const double eta = std::exp(-gamma * ln_n_total);
  return theorem1_bound(q, n, gamma, beta) + x / (1.0 - eta);
}

double q0_threshold(double gamma, double delta) {
  require(gamma >= 0.5, "q0_threshold needs gamma >= 1/2");
  require(delta > 0.0 && delta <= 0.5, "q0_threshold needs delta in (0, 1/2]");
  const double beta = delta / (2.0 * gamma);
  const double ln_q0 =
      (2.0 * beta * std::log(4.0) - std::log(beta) + 2.0 * std::log(6.0) - std::log(4.0)) /
      delta;
  return std::exp(ln_q0);
}

// ---------------------------------------------------------------------------
// Gaussian constants

double gaussian_Q(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

namespace {

// log Q(z) for z >= 0; asymptotic expansion once erfc reaches the
// underflow region
double log_gaussian_Q(double z) {
  if (z < 35.0) return std::log(gaussian_Q(z));
  double z2 = z * z;
  return -0.5 * z2 - std::log(z) - 0.5 * std::log(8.0 * std::atan(1.0)) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

double m_beta(double beta) {
  require(beta > 0.0 && beta <= 1.0, "m_beta needs beta in (0, 1]");
  // integrand is even in z, so integrate [0, cutoff] and double;
  // Q(-z) = 1 - Q(z) stays in [1/2, 1] there
  auto integrand = [beta](double z) {
    double log_qq = log_gaussian_Q(z) + std::log1p(-gaussian_Q(z));
    return std::exp(beta * log_qq);
  };
  const double cutoff = std::max(40.0, std::sqrt(80.0 / beta));
  return 2.0 * integrate(integrand, 0.0, cutoff, 1e-8);
}

double lambda_tilde(std::uint32_t q, double beta) {
  require(q >= 1, "lambda_tilde needs q >= 1");
  return m_beta(beta) / std::sqrt(static_cast<double>(q)) * std::pow(0.25, 0.5 - beta);
}

// ---------------------------------------------------------------------------
// proof-inequality sweeps

namespace {

double kl_bernoulli(double y, double x) {
  double t1 = (y == 0.0) ? 0.0 : y * std::log(y / x);
  double t2 = (y == 1.0) ? 0.0 : (1.0 - y) * std::log((1.0 - y) / (1.0 - x));
  return t1 + t2;
}

double quad_divergence(double y, double x) {
  double denom = x * (1.0 - x) + (1.0 - 2.0 * x) * (y - x) / 3.0;
  return 0.5 * (y - x) * (y - x) / denom;
}

struct SlackTracker {
  double min_slack = std::numeric_limits<double>::infinity();
  double wx = 0.0, wy = 0.0;

  void offer(double slack, double x, double y) {
    if (slack < min_slack) {
      min_slack = slack;
      wx = x;
      wy = y;
    }
  }
};

InequalityReport finish(std::string name, const SlackTracker& t) {
  InequalityReport rep;
  rep.name = std::move(name);
  rep.min_slack = t.min_slack;
  rep.witness_x = t.wx;
  rep.witness_y = t.wy;
  rep.pass = t.min_slack >= kSlackTolerance;
  return rep;
}

}  // namespace

std::vector<InequalityReport> check_proof_inequalities(std::uint32_t q, double beta,
                                                       std::size_t grid_points) {
  require(q >= 2, "check_proof_inequalities needs q >= 2");
  require(beta > 0.0 && beta <= 0.5, "check_proof_inequalities needs beta in (0, 1/2]");
  require(grid_points >= 64, "check_proof_inequalities needs at least 64 grid points");
  const double eps = 1e-9;
  auto grid_at = [&](std::size_t j, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(grid_points - 1);
  };

  std::vector<InequalityReport> out;

  // (a) d(y,x) <= D(y||x) for x <= y
  {
    SlackTracker t;
    for (std::size_t jx = 0; jx < grid_points; ++jx) {
      double x = grid_at(jx, eps, 1.0 - eps);
      for (std::size_t jy = 0; jy < grid_points; ++jy) {
        double y = grid_at(jy, x, 1.0 - eps);
        t.offer(kl_bernoulli(y, x) - quad_divergence(y, x), x, y);
      }
    }
    out.push_back(finish("kl_vs_quadratic", t));
  }

  // (b) D(y||x) >= (y - x) + (1-y) ln((1-y)/(1-x))
  {
    SlackTracker t;
    for (std::size_t jx = 0; jx < grid_points; ++jx) {
      double x = grid_at(jx, eps, 1.0 - eps);
      for (std::size_t jy = 0; jy < grid_points; ++jy) {
        double y = grid_at(jy, eps, 1.0 - eps);
        double rhs = (y - x) + (1.0 - y) * std::log((1.0 - y) / (1.0 - x));
        t.offer(kl_bernoulli(y, x) - rhs, x, y);
      }
    }
    out.push_back(finish("kl_poisson_lower", t));
  }

  // (c) 1 - z + z ln z >= (1-z)^2 / 2 on [0,1]
  {
    SlackTracker t;
    for (std::size_t j = 0; j < grid_points; ++j) {
      double z = grid_at(j, 0.0, 1.0);
      double lhs = 1.0 - z + ((z == 0.0) ? 0.0 : z * std::log(z));
      t.offer(lhs - 0.5 * (1.0 - z) * (1.0 - z), z, 0.0);
    }
    out.push_back(finish("poisson_quadratic", t));
  }

  // (d) middle term of the tail decomposition, x in [1/2, 1]
  {
    SlackTracker t;
    const double inv_sqrt_2q = 1.0 / std::sqrt(2.0 * static_cast<double>(q));
    for (std::size_t j = 0; j < grid_points; ++j) {
      double x = grid_at(j, 0.5, 1.0);
      auto i = static_cast<std::uint32_t>(
          std::min<double>(q - 1, std::max(0.0, std::ceil(static_cast<double>(q) * x) - 1.0)));
      Prob psi = de::psi_pair(q, i, Prob::of(x));
      double lhs = std::pow(psi.p * psi.c, beta) / static_cast<double>(q);
      double rhs = std::pow(2.0 * x * (1.0 - x), beta) * inv_sqrt_2q;
      t.offer(rhs - lhs, x, 0.0);
    }
    out.push_back(finish("middle_term", t));
  }

  // (e) full (T_q V) upper bound, x in [1/2, 1]
  {
    SlackTracker t;
    const double pi = 4.0 * std::atan(1.0);
    const double a_const = std::sqrt(pi) + std::sqrt(4.0 * pi / 3.0) + std::sqrt(pi / 2.0);
    const double inv_sqrt_2q = 1.0 / std::sqrt(2.0 * static_cast<double>(q));
    PolarOperator op = PolarOperator::rs(q);
    LyapunovFn v = LyapunovFn::power(beta);
    for (std::size_t j = 0; j < grid_points; ++j) {
      double x = grid_at(j, 0.5, 1.0);
      double lhs = apply_operator(op, v, Prob::of(x));
      double rhs = std::pow(2.0 * x * (1.0 - x), beta) * inv_sqrt_2q +
                   a_const * std::sqrt(x * (1.0 - x) / (static_cast<double>(q) * beta));
      t.offer(rhs - lhs, x, 0.0);
    }
    out.push_back(finish("tv_upper_bound", t));
  }

  return out;
}

}  // namespace polarscale::lyapunov
