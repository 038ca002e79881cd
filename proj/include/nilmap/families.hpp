#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nilmap/polynomial.hpp"
#include "nilmap/program.hpp"

namespace nilmap {

/// Invalid family parameters (precondition violations).
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Coefficients of one (x_{2j-1}, x_{2j}) block of the dependent-rows family.
/// All four live in the n-variable ring and may only use x_1..x_{2j-2}.
struct PairCoefficients {
  Polynomial a_odd;
  Polynomial a_even;
  Polynomial b_odd;
  Polynomial b_even;
};

/// H_{2j-1} = a_{2j} f(a_{2j-1} x_{2j-1} + a_{2j} x_{2j}) + b_{2j-1},
/// H_{2j}   = -a_{2j-1} f(...) + b_{2j}.
struct DependentFamilySpec {
  std::size_t n = 2;
  std::vector<PairCoefficients> pairs;
  Polynomial f;  // univariate

  void validate() const;
};

/// Dependent-rows family with b == 0, odd f with negative coefficients and
/// R(x_{n+1}) = sum d_{2l} x_{n+1}^{2l} with positive coefficients.
struct HurwitzFieldSpec {
  DependentFamilySpec base;
  Rational lambda;
  Polynomial R;  // univariate

  void validate() const;
  /// A_1, A_3, ... (index i holds A_{2i+1}).
  std::vector<Rational> f_coefficients() const;
  /// d_2, d_4, ... (index l-1 holds d_{2l}).
  std::vector<Rational> r_coefficients() const;
  std::size_t k() const { return r_coefficients().size(); }
};

struct Density {
  Polynomial P;
  Rational alpha;
};

struct EssenFamilySpec {
  std::size_t n = 4;
  Polynomial a;  // univariate, degree n-1
  Polynomial g;  // univariate, g(0) = 0, degree >= 1
  Rational lambda = 1;

  void validate() const;
};

/// Four-dimensional family in (x, y, z, w) with t = lambda (y + b1 x + v1 alpha_p x^2).
struct Dim4FamilySpec {
  Polynomial f;  // univariate
  Rational b1 = 0;
  Rational v1 = 1;
  Rational alpha_p = 1;
  Rational lambda = 1;

  void validate() const;
};

/// Univariate polynomial from coefficients c[0] + c[1] t + ...
Polynomial univariate(const std::vector<Rational>& coeffs);

// Dependent-rows family.
MapProgram dependent_H_program(const DependentFamilySpec& spec);
PolyMap build_dependent_H(const DependentFamilySpec& spec);
/// Inverse of lambda X + H by per-block back-substitution (structured form).
MapProgram dependent_inverse_program(const DependentFamilySpec& spec, const Rational& lambda);

struct DependentInverse {
  PolyMap inverse;
  /// Whether the closed form as printed (gamma x - gamma a f(gamma(...)) - b,
  /// coefficients evaluated at the image point) inverts the map.
  bool displayed_form_valid = false;
  /// Whether the block back-substitution matched the formal inverse.
  bool matches_formal_inverse = false;
};
DependentInverse build_dependent_inverse(const DependentFamilySpec& spec, const Rational& lambda);
/// The closed form exactly as printed, for comparison.
PolyMap dependent_inverse_displayed(const DependentFamilySpec& spec, const Rational& lambda);

// Almost-Hurwitz fields.
PolyMap build_hurwitz_F(const HurwitzFieldSpec& spec);
Rational alpha_bound(const HurwitzFieldSpec& spec);
Density build_density(const HurwitzFieldSpec& spec, const Rational& alpha);

// Essen family.
MapProgram essen_H_program(const EssenFamilySpec& spec);
PolyMap build_essen_H(const EssenFamilySpec& spec);
MapProgram essen_inverse_program(const EssenFamilySpec& spec);
/// Inverse of lambda X + H, cross-validated against formal_inverse.
PolyMap build_essen_inverse(const EssenFamilySpec& spec);
/// sum_{i>=2} (-1)^i u_i / lambda^{i-1} - a(u_1/lambda) with u = lambda X + H.
Polynomial essen_invariant(const EssenFamilySpec& spec);
/// essen_invariant(spec) == x2 - a(x1).
bool essen_sum_identity_check(const EssenFamilySpec& spec);

// Four-dimensional family.
MapProgram dim4_H_program(const Dim4FamilySpec& spec);
PolyMap build_dim4_H(const Dim4FamilySpec& spec);
MapProgram dim4_inverse_program(const Dim4FamilySpec& spec);
PolyMap build_dim4_inverse(const Dim4FamilySpec& spec);
/// u2 - u4/lambda with u = lambda X + H.
Polynomial dim4_phi(const Dim4FamilySpec& spec);

// Markus-Yamabe counterexample field.
PolyMap cegmh_field(std::size_t n = 3);

}  // namespace nilmap
