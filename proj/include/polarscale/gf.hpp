#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "polarscale/common.hpp"
#include "polarscale/rng.hpp"

namespace polarscale::gf {

/// Arithmetic in F_q for a prime power q = p^e, q <= 2^16.
///
/// Elements are integers in [0, q). For e > 1 the index is the polynomial
/// representation read in base p: index = sum_i c_i p^i with c_i the
/// coefficient of x^i. Index 0 is the additive identity, index 1 the
/// multiplicative identity. Multiplication for e > 1 goes through
/// log/antilog tables built once at construction.
class Field {
 public:
  /// Field with the default modulus: the lowest irreducible monic polynomial
  /// of degree e over F_p, ordered by its non-leading coefficients read as a
  /// base-p integer.
  explicit Field(std::uint32_t q);

  /// Field with an explicit modulus, given as e+1 coefficients in ascending
  /// degree order (must be monic and irreducible over F_p).
  Field(std::uint32_t q, const std::vector<std::uint32_t>& modulus);

  std::uint32_t q() const { return q_; }
  std::uint32_t characteristic() const { return p_; }
  std::uint32_t extension_degree() const { return e_; }
  /// Modulus coefficients (ascending degree, size e+1); empty for e == 1.
  const std::vector<std::uint32_t>& modulus() const { return modulus_; }

  std::uint32_t add(std::uint32_t a, std::uint32_t b) const;
  std::uint32_t sub(std::uint32_t a, std::uint32_t b) const;
  std::uint32_t neg(std::uint32_t a) const;
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const;
  std::uint32_t inv(std::uint32_t a) const;  // throws on a == 0
  std::uint32_t div(std::uint32_t a, std::uint32_t b) const;
  std::uint32_t pow(std::uint32_t a, std::uint64_t n) const;

  bool same_as(const Field& other) const {
    return q_ == other.q_ && modulus_ == other.modulus_;
  }

  std::string describe() const;

 private:
  void build_tables();
  std::uint32_t poly_mul(std::uint32_t a, std::uint32_t b) const;

  std::uint32_t q_ = 0, p_ = 0, e_ = 1;
  std::vector<std::uint32_t> modulus_;      // ascending degree; empty for e == 1
  std::vector<std::uint32_t> log_, exp_;    // e > 1 only
};

using FieldPtr = std::shared_ptr<const Field>;

FieldPtr make_field(std::uint32_t q);
FieldPtr make_field(std::uint32_t q, const std::vector<std::uint32_t>& modulus);

/// Element of a specific field. Carries its field so mixed-field arithmetic
/// is rejected instead of silently misinterpreted.
class FieldElement {
 public:
  FieldElement() = default;
  FieldElement(std::uint32_t index, FieldPtr field);

  std::uint32_t index() const { return index_; }
  const FieldPtr& field() const { return field_; }

  FieldElement operator+(const FieldElement& o) const;
  FieldElement operator-(const FieldElement& o) const;
  FieldElement operator*(const FieldElement& o) const;
  FieldElement operator/(const FieldElement& o) const;
  FieldElement inverse() const;
  bool operator==(const FieldElement& o) const;

 private:
  void check_compatible(const FieldElement& o) const;

  std::uint32_t index_ = 0;
  FieldPtr field_;
};

/// Dense row-major matrix over one field. Entries are element indices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, FieldPtr field);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const FieldPtr& field() const { return field_; }

  std::uint32_t operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }
  std::uint32_t& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  FieldElement at(std::size_t r, std::size_t c) const;

  static Matrix identity(std::size_t n, FieldPtr field);
  Matrix transposed() const;

  /// Submatrix of the given rows/columns (indices in order, may repeat).
  Matrix select(const std::vector<std::size_t>& row_ids,
                const std::vector<std::size_t>& col_ids) const;

  bool operator==(const Matrix& o) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  FieldPtr field_;
  std::vector<std::uint32_t> a_;
};

/// Rank over F_q by Gaussian elimination (first nonzero pivot per column).
/// Empty matrices have rank 0.
std::size_t rank(const Matrix& m);

/// True iff v (length m.rows()) lies in the column space of m,
/// i.e. rank([v m]) == rank(m). The zero vector is always in the span.
bool in_colspace(const std::vector<std::uint32_t>& v, const Matrix& m);

/// Uniform sample over full-rank rows x cols matrices (rows <= cols), by
/// rejection: draw uniform matrices until one has rank == rows. The
/// acceptance probability is at least prod_{l>=1} (1 - q^-l) > 0.288 for
/// q = 2, so the loop terminates quickly.
Matrix sample_full_rank(std::size_t rows, std::size_t cols, const FieldPtr& field, Rng& rng);

/// Kronecker product over a shared field.
Matrix kronecker(const Matrix& a, const Matrix& b);

}  // namespace polarscale::gf
