#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "nilmap/polynomial.hpp"

namespace nilmap {

/// Square matrix with polynomial entries, all in the same ring.
class PolyMatrix {
 public:
  PolyMatrix() = default;
  PolyMatrix(std::size_t n, std::size_t nvars);
  PolyMatrix(std::size_t n, std::vector<Polynomial> row_major);

  static PolyMatrix identity(std::size_t n, std::size_t nvars);

  std::size_t size() const { return n_; }
  std::size_t nvars() const { return nvars_; }
  const Polynomial& operator()(std::size_t i, std::size_t j) const { return e_[i * n_ + j]; }
  Polynomial& operator()(std::size_t i, std::size_t j) { return e_[i * n_ + j]; }

  bool is_zero() const;
  Polynomial trace() const;
  PolyMatrix operator+(const PolyMatrix& o) const;
  PolyMatrix operator*(const Rational& c) const;
  /// Substitutes a map into every entry: M(G).
  PolyMatrix compose(std::span<const Polynomial> subst) const;
  std::vector<double> eval_float(std::span<const double> x) const;  // row-major

  friend bool operator==(const PolyMatrix&, const PolyMatrix&);

  nlohmann::json to_json() const;
  static PolyMatrix from_json(const nlohmann::json& j);

 private:
  std::size_t n_ = 0;
  std::size_t nvars_ = 1;
  std::vector<Polynomial> e_;
};

struct NilpotencyCertificate {
  bool nilpotent = false;
  /// Smallest k with M^k == 0; 0 when not nilpotent.
  std::size_t index = 0;
  /// Coefficients of det(tI - M), index = power of t.
  std::vector<Polynomial> char_poly_coeffs;

  nlohmann::json to_json() const;
};

PolyMatrix jacobian_of(const PolyMap& f);
PolyMatrix mat_mul(const PolyMatrix& a, const PolyMatrix& b);
PolyMatrix mat_pow(const PolyMatrix& a, unsigned k);

/// Faddeev-LeVerrier recurrence; exact because division is by integers over Q.
std::vector<Polynomial> char_poly(const PolyMatrix& m);

/// Certificate from the characteristic polynomial, cross-checked against
/// successive powers. Throws std::logic_error if the two disagree.
NilpotencyCertificate is_nilpotent(const PolyMatrix& m);

/// Nonzero c with sum_i c_i * row_i(M) == 0 identically, or nullopt when the
/// rows are independent over R. First nonzero entry of c is 1.
std::optional<std::vector<Rational>> rows_dependent_over_R(const PolyMatrix& m);

/// Right nullspace basis of an exact rational matrix (rows x cols), computed
/// with fraction-free elimination.
std::vector<std::vector<Rational>> rational_nullspace(const std::vector<std::vector<Rational>>& a,
                                                      std::size_t cols);

}  // namespace nilmap
