#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nilmap/rational.hpp"

namespace nilmap {

inline constexpr std::size_t kMaxVars = 16;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an intermediate result grows past the configured term cap.
class TermCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Current term cap. Defaults to 10^6, overridable with NILMAP_TERM_CAP.
std::size_t term_cap();
void set_term_cap(std::size_t cap);

struct Monomial {
  std::array<std::uint16_t, kMaxVars> exp{};
  std::uint32_t degree = 0;

  static Monomial variable(std::size_t i, std::uint16_t power = 1);
  static Monomial from_exponents(std::span<const unsigned> e);

  Monomial operator*(const Monomial& o) const;
  friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Total degree first, then lexicographic with x1 most significant.
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    if (a.degree != b.degree) return a.degree < b.degree;
    return a.exp < b.exp;
  }
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const noexcept;
};

struct Term {
  Monomial mono;
  Rational coef;
};

/// Sparse multivariate polynomial over Q in variables x1..xn.
///
/// Terms are kept sorted ascending in graded-lex order with no zero
/// coefficients, so two equal polynomials always have identical storage.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::size_t nvars);

  static Polynomial constant(std::size_t nvars, const Rational& c);
  static Polynomial variable(std::size_t nvars, std::size_t i);
  static Polynomial monomial(std::size_t nvars, const Monomial& m, const Rational& c);
  /// Builds from unsorted terms; merges duplicates and drops zeros.
  static Polynomial from_terms(std::size_t nvars, std::vector<Term> terms);

  std::size_t nvars() const { return nvars_; }
  std::span<const Term> terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  /// Total degree, -1 for the zero polynomial.
  int degree() const;
  /// Degree in a single variable, -1 for the zero polynomial.
  int degree_in(std::size_t i) const;
  Rational coefficient(const Monomial& m) const;
  Rational constant_term() const;
  /// True when only variables with index < k occur.
  bool depends_only_on_first(std::size_t k) const;

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(const Polynomial& o);
  Polynomial& operator*=(const Rational& c);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Polynomial a, const Rational& c) { return a *= c; }
  friend Polynomial operator*(const Rational& c, Polynomial a) { return a *= c; }
  friend bool operator==(const Polynomial& a, const Polynomial& b);

  /// Product with every term of total degree above `max_degree` discarded.
  static Polynomial mul_truncated(const Polynomial& a, const Polynomial& b, int max_degree);
  Polynomial truncated(int max_degree) const;
  Polynomial pow(unsigned k) const;

  Polynomial partial(std::size_t i) const;
  /// Substitutes subst[i] for x_{i+1}. All substitutes must share nvars.
  Polynomial compose(std::span<const Polynomial> subst) const;
  /// Same nvars; sets x_{i+1} to a constant.
  Polynomial restrict_variable(std::size_t i, const Rational& value) const;
  /// Reinterprets in a ring with more variables (new ones unused).
  Polynomial extend_vars(std::size_t nvars) const;

  Rational eval_exact(std::span<const Rational> point) const;
  double eval_float(std::span<const double> point) const;

  /// Canonical text, e.g. "3/2*x1^2*x3 - x2".
  std::string to_string() const;
  static Polynomial parse(std::string_view text, std::size_t nvars);

  /// Term-list JSON: [{"coef":"3/2","exp":[2,0,1]}, ...] in descending graded-lex order.
  nlohmann::json to_json() const;
  static Polynomial from_json(const nlohmann::json& j, std::size_t nvars);
  /// As from_json, taking nvars from the first exponent vector (1 when empty).
  static Polynomial from_json(const nlohmann::json& j);

 private:
  void check_same(const Polynomial& o, const char* op) const;
  static void check_cap(std::size_t n);

  std::size_t nvars_ = 1;
  std::vector<Term> terms_;
};

/// Evaluates a univariate polynomial at a ring element by Horner's rule.
template <class R>
R horner(const Polynomial& f, const R& t, const R& one) {
  if (f.nvars() != 1) throw DimensionError("horner: polynomial is not univariate");
  R acc = one * Rational(0);
  if (f.is_zero()) return acc;
  auto terms = f.terms();
  int d = f.degree();
  std::size_t k = terms.size();
  for (int e = d; e >= 0; --e) {
    acc = acc * t;
    if (k > 0 && static_cast<int>(terms[k - 1].mono.exp[0]) == e) {
      acc = acc + one * terms[k - 1].coef;
      --k;
    }
  }
  return acc;
}

/// Square polynomial map x -> (F_1(x), ..., F_n(x)).
class PolyMap {
 public:
  PolyMap() = default;
  explicit PolyMap(std::vector<Polynomial> components);

  static PolyMap identity(std::size_t n);

  std::size_t arity() const { return comps_.size(); }
  const Polynomial& operator[](std::size_t i) const { return comps_[i]; }
  std::span<const Polynomial> components() const { return comps_; }

  /// (this o inner)(x) = this(inner(x)).
  PolyMap compose(const PolyMap& inner) const;
  PolyMap operator+(const PolyMap& o) const;
  PolyMap operator-(const PolyMap& o) const;
  PolyMap operator*(const Rational& c) const;
  friend bool operator==(const PolyMap&, const PolyMap&);

  int degree() const;
  std::vector<double> eval_float(std::span<const double> x) const;
  std::vector<Rational> eval_exact(std::span<const Rational> x) const;

  nlohmann::json to_json() const;
  static PolyMap from_json(const nlohmann::json& j);

 private:
  std::vector<Polynomial> comps_;
};

}  // namespace nilmap
