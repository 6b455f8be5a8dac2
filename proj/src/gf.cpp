#include "polarscale/gf.hpp"

#include <algorithm>
#include <sstream>

namespace polarscale::gf {
namespace {

constexpr std::uint32_t kMaxQ = 1u << 16;

bool is_prime(std::uint32_t n) {
  if (n < 2) return false;
  for (std::uint32_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

// q = p^e with p the smallest prime factor; throws if q is not a prime power.
void factor_prime_power(std::uint32_t q, std::uint32_t& p, std::uint32_t& e) {
  require(q >= 2 && q <= kMaxQ, "field size q must be in [2, 65536], got " + std::to_string(q));
  std::uint32_t base = q;
  for (std::uint32_t d = 2; d * d <= base; ++d) {
    if (base % d == 0) {
      base = d;
      break;
    }
  }
  p = base;
  e = 0;
  std::uint32_t acc = 1;
  while (acc < q) {
    acc *= p;
    ++e;
  }
  require(acc == q && is_prime(p),
          "q = " + std::to_string(q) + " is not a prime power");
}

// Polynomials over F_p as coefficient vectors, ascending degree, no
// trailing zeros. Used only for modulus selection and validation.
using Poly = std::vector<std::uint32_t>;

Poly poly_mod(Poly a, const Poly& b, std::uint32_t p) {
  // b is monic
  while (a.size() >= b.size()) {
    std::uint32_t lead = a.back();
    if (lead != 0) {
      std::size_t shift = a.size() - b.size();
      for (std::size_t i = 0; i < b.size(); ++i) {
        std::uint64_t t = static_cast<std::uint64_t>(lead) * b[i] % p;
        a[shift + i] = static_cast<std::uint32_t>((a[shift + i] + p - t) % p);
      }
    }
    a.pop_back();
  }
  while (!a.empty() && a.back() == 0) a.pop_back();
  return a;
}

// Trial division by every monic polynomial of degree 1..deg/2.
bool is_irreducible(const Poly& f, std::uint32_t p) {
  std::size_t deg = f.size() - 1;
  if (deg == 0) return false;
  if (deg == 1) return true;
  for (std::size_t d = 1; 2 * d <= deg; ++d) {
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < d; ++i) count *= p;
    for (std::uint64_t idx = 0; idx < count; ++idx) {
      Poly g(d + 1, 0);
      std::uint64_t t = idx;
      for (std::size_t i = 0; i < d; ++i) {
        g[i] = static_cast<std::uint32_t>(t % p);
        t /= p;
      }
      g[d] = 1;
      if (poly_mod(f, g, p).empty()) return false;
    }
  }
  return true;
}

// Lowest irreducible monic polynomial of degree e, ordering the candidates
// by their non-leading coefficients read as a base-p integer.
Poly default_modulus(std::uint32_t p, std::uint32_t e) {
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < e; ++i) count *= p;
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    Poly f(e + 1, 0);
    std::uint64_t t = idx;
    for (std::uint32_t i = 0; i < e; ++i) {
      f[i] = static_cast<std::uint32_t>(t % p);
      t /= p;
    }
    f[e] = 1;
    if (is_irreducible(f, p)) return f;
  }
  throw InvariantError("no irreducible polynomial found (p=" + std::to_string(p) +
                       ", e=" + std::to_string(e) + ")");
}

std::uint32_t mod_inverse(std::uint32_t a, std::uint32_t p) {
  // extended Euclid
  std::int64_t t = 0, new_t = 1, r = p, new_r = a;
  while (new_r != 0) {
    std::int64_t qq = r / new_r;
    std::int64_t tmp = t - qq * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - qq * new_r;
    r = new_r;
    new_r = tmp;
  }
  if (t < 0) t += p;
  return static_cast<std::uint32_t>(t);
}

}  // namespace

Field::Field(std::uint32_t q) {
  factor_prime_power(q, p_, e_);
  q_ = q;
  if (e_ > 1) {
    modulus_ = default_modulus(p_, e_);
    build_tables();
  }
}

Field::Field(std::uint32_t q, const std::vector<std::uint32_t>& modulus) {
  factor_prime_power(q, p_, e_);
  q_ = q;
  if (e_ == 1) {
    require(modulus.empty(), "prime field F_" + std::to_string(q) + " takes no modulus");
    return;
  }
  require(modulus.size() == e_ + 1, "modulus must have degree e = " + std::to_string(e_));
  for (std::uint32_t c : modulus)
    require(c < p_, "modulus coefficients must lie in [0, p)");
  require(modulus.back() == 1, "modulus must be monic");
  require(is_irreducible(modulus, p_), "modulus is not irreducible over F_" + std::to_string(p_));
  modulus_ = modulus;
  build_tables();
}

std::uint32_t Field::poly_mul(std::uint32_t a, std::uint32_t b) const {
  // schoolbook product of the base-p digit vectors, reduced mod modulus_
  std::vector<std::uint32_t> da(e_, 0), db(e_, 0), prod(2 * e_ - 1, 0);
  for (std::uint32_t i = 0; i < e_; ++i, a /= p_) da[i] = a % p_;
  for (std::uint32_t i = 0; i < e_; ++i, b /= p_) db[i] = b % p_;
  for (std::uint32_t i = 0; i < e_; ++i) {
    if (da[i] == 0) continue;
    for (std::uint32_t j = 0; j < e_; ++j)
      prod[i + j] = static_cast<std::uint32_t>(
          (prod[i + j] + static_cast<std::uint64_t>(da[i]) * db[j]) % p_);
  }
  for (std::size_t d = prod.size(); d-- > e_;) {
    std::uint32_t lead = prod[d];
    if (lead == 0) continue;
    prod[d] = 0;
    for (std::uint32_t i = 0; i < e_; ++i) {
      std::uint64_t t = static_cast<std::uint64_t>(lead) * modulus_[i] % p_;
      prod[d - e_ + i] = static_cast<std::uint32_t>((prod[d - e_ + i] + p_ - t) % p_);
    }
  }
  std::uint32_t out = 0;
  for (std::uint32_t i = e_; i-- > 0;) out = out * p_ + prod[i];
  return out;
}

void Field::build_tables() {
  // Find a multiplicative generator, then lay out log/antilog tables.
  log_.assign(q_, 0);
  exp_.assign(2 * (q_ - 1), 0);
  for (std::uint32_t cand = 2; cand < q_; ++cand) {
    std::uint32_t x = 1;
    std::uint32_t order = 0;
    do {
      x = poly_mul(x, cand);
      ++order;
    } while (x != 1);
    if (order == q_ - 1) {
      x = 1;
      for (std::uint32_t k = 0; k < q_ - 1; ++k) {
        exp_[k] = x;
        exp_[k + (q_ - 1)] = x;
        log_[x] = k;
        x = poly_mul(x, cand);
      }
      return;
    }
  }
  throw InvariantError("no generator found for F_" + std::to_string(q_));
}

std::uint32_t Field::add(std::uint32_t a, std::uint32_t b) const {
  if (e_ == 1) {
    std::uint64_t s = static_cast<std::uint64_t>(a) + b;
    return static_cast<std::uint32_t>(s >= p_ ? s - p_ : s);
  }
  if (p_ == 2) return a ^ b;
  std::uint32_t out = 0, mult = 1;
  for (std::uint32_t i = 0; i < e_; ++i) {
    std::uint32_t da = a % p_, db = b % p_;
    a /= p_;
    b /= p_;
    std::uint32_t s = da + db;
    if (s >= p_) s -= p_;
    out += s * mult;
    mult *= p_;
  }
  return out;
}

std::uint32_t Field::neg(std::uint32_t a) const {
  if (e_ == 1) return a == 0 ? 0 : p_ - a;
  if (p_ == 2) return a;
  std::uint32_t out = 0, mult = 1;
  for (std::uint32_t i = 0; i < e_; ++i) {
    std::uint32_t da = a % p_;
    a /= p_;
    out += (da == 0 ? 0 : p_ - da) * mult;
    mult *= p_;
  }
  return out;
}

std::uint32_t Field::sub(std::uint32_t a, std::uint32_t b) const { return add(a, neg(b)); }

std::uint32_t Field::mul(std::uint32_t a, std::uint32_t b) const {
  if (a == 0 || b == 0) return 0;
  if (e_ == 1) return static_cast<std::uint32_t>(static_cast<std::uint64_t>(a) * b % p_);
  return exp_[log_[a] + log_[b]];
}

std::uint32_t Field::inv(std::uint32_t a) const {
  require(a != 0, "division by zero in F_" + std::to_string(q_));
  if (e_ == 1) return mod_inverse(a, p_);
  return exp_[(q_ - 1) - log_[a]];
}

std::uint32_t Field::div(std::uint32_t a, std::uint32_t b) const { return mul(a, inv(b)); }

std::uint32_t Field::pow(std::uint32_t a, std::uint64_t n) const {
  std::uint32_t out = 1;
  while (n > 0) {
    if (n & 1) out = mul(out, a);
    a = mul(a, a);
    n >>= 1;
  }
  return out;
}

std::string Field::describe() const {
  std::ostringstream os;
  os << "F_" << q_;
  if (e_ > 1) {
    os << " (p=" << p_ << ", modulus";
    for (std::uint32_t c : modulus_) os << ' ' << c;
    os << ")";
  }
  return os.str();
}

FieldPtr make_field(std::uint32_t q) { return std::make_shared<const Field>(q); }
FieldPtr make_field(std::uint32_t q, const std::vector<std::uint32_t>& modulus) {
  return std::make_shared<const Field>(q, modulus);
}

FieldElement::FieldElement(std::uint32_t index, FieldPtr field)
    : index_(index), field_(std::move(field)) {
  require(field_ != nullptr, "FieldElement needs a field");
  require(index_ < field_->q(), "element index " + std::to_string(index_) +
                                    " out of range for " + field_->describe());
}

void FieldElement::check_compatible(const FieldElement& o) const {
  require(field_ && o.field_ && field_->same_as(*o.field_),
          "mismatched fields in element arithmetic");
}

FieldElement FieldElement::operator+(const FieldElement& o) const {
  check_compatible(o);
  return FieldElement(field_->add(index_, o.index_), field_);
}
FieldElement FieldElement::operator-(const FieldElement& o) const {
  check_compatible(o);
  return FieldElement(field_->sub(index_, o.index_), field_);
}
FieldElement FieldElement::operator*(const FieldElement& o) const {
  check_compatible(o);
  return FieldElement(field_->mul(index_, o.index_), field_);
}
FieldElement FieldElement::operator/(const FieldElement& o) const {
  check_compatible(o);
  return FieldElement(field_->div(index_, o.index_), field_);
}
FieldElement FieldElement::inverse() const { return FieldElement(field_->inv(index_), field_); }
bool FieldElement::operator==(const FieldElement& o) const {
  return field_ && o.field_ && field_->same_as(*o.field_) && index_ == o.index_;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, FieldPtr field)
    : rows_(rows), cols_(cols), field_(std::move(field)), a_(rows * cols, 0) {
  require(field_ != nullptr, "Matrix needs a field");
}

FieldElement Matrix::at(std::size_t r, std::size_t c) const {
  return FieldElement((*this)(r, c), field_);
}

Matrix Matrix::identity(std::size_t n, FieldPtr field) {
  Matrix m(n, n, std::move(field));
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_, field_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::select(const std::vector<std::size_t>& row_ids,
                      const std::vector<std::size_t>& col_ids) const {
  Matrix s(row_ids.size(), col_ids.size(), field_);
  for (std::size_t r = 0; r < row_ids.size(); ++r) {
    require(row_ids[r] < rows_, "row index out of range in select()");
    for (std::size_t c = 0; c < col_ids.size(); ++c) {
      require(col_ids[c] < cols_, "column index out of range in select()");
      s(r, c) = (*this)(row_ids[r], col_ids[c]);
    }
  }
  return s;
}

bool Matrix::operator==(const Matrix& o) const {
  return rows_ == o.rows_ && cols_ == o.cols_ && field_ && o.field_ &&
         field_->same_as(*o.field_) && a_ == o.a_;
}

std::size_t rank(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  const Field& f = *m.field();
  Matrix w = m;
  std::size_t r = 0;
  for (std::size_t c = 0; c < w.cols() && r < w.rows(); ++c) {
    std::size_t pivot = r;
    while (pivot < w.rows() && w(pivot, c) == 0) ++pivot;
    if (pivot == w.rows()) continue;
    if (pivot != r)
      for (std::size_t j = c; j < w.cols(); ++j) std::swap(w(pivot, j), w(r, j));
    std::uint32_t piv_inv = f.inv(w(r, c));
    for (std::size_t i = r + 1; i < w.rows(); ++i) {
      std::uint32_t factor = f.mul(w(i, c), piv_inv);
      if (factor == 0) continue;
      for (std::size_t j = c; j < w.cols(); ++j)
        w(i, j) = f.sub(w(i, j), f.mul(factor, w(r, j)));
    }
    ++r;
  }
  return r;
}

bool in_colspace(const std::vector<std::uint32_t>& v, const Matrix& m) {
  require(v.size() == m.rows(), "in_colspace: vector length " + std::to_string(v.size()) +
                                    " != rows " + std::to_string(m.rows()));
  bool all_zero = true;
  for (std::uint32_t x : v)
    if (x != 0) all_zero = false;
  if (all_zero) return true;
  if (m.cols() == 0) return false;
  Matrix aug(m.rows(), m.cols() + 1, m.field());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    aug(r, 0) = v[r];
    for (std::size_t c = 0; c < m.cols(); ++c) aug(r, c + 1) = m(r, c);
  }
  return rank(aug) == rank(m);
}

Matrix sample_full_rank(std::size_t rows, std::size_t cols, const FieldPtr& field, Rng& rng) {
  require(rows <= cols, "sample_full_rank: rows must be <= cols");
  Matrix m(rows, cols, field);
  if (rows == 0) return m;
  const std::uint32_t q = field->q();
  while (true) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        m(r, c) = static_cast<std::uint32_t>(rng.below(q));
    if (rank(m) == rows) return m;
  }
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  require(a.field() && b.field() && a.field()->same_as(*b.field()),
          "kronecker: mismatched fields");
  const Field& f = *a.field();
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols(), a.field());
  for (std::size_t ar = 0; ar < a.rows(); ++ar)
    for (std::size_t ac = 0; ac < a.cols(); ++ac) {
      std::uint32_t scale = a(ar, ac);
      if (scale == 0) continue;
      for (std::size_t br = 0; br < b.rows(); ++br)
        for (std::size_t bc = 0; bc < b.cols(); ++bc)
          k(ar * b.rows() + br, ac * b.cols() + bc) = f.mul(scale, b(br, bc));
    }
  return k;
}

}  // namespace polarscale::gf
