#pragma once

#include <random>
#include <vector>

#include "nilmap/families.hpp"
#include "nilmap/polynomial.hpp"

namespace nilmap::testing {

inline Polynomial P(const char* text, std::size_t nvars) { return Polynomial::parse(text, nvars); }
inline Rational Q(const char* text) { return parse_rational(text); }

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng_); }
  long nonzero(long lo, long hi) {
    for (;;)
      if (long v = integer(lo, hi); v != 0) return v;
  }
  Rational rational() {
    Rational q(Integer(nonzero(-3, 3)), Integer(integer(1, 2)));
    q.canonicalize();
    return q;
  }

  // A few small-integer terms of degree <= max_deg in x1..x_k (k may be 0).
  Polynomial sparse(std::size_t nvars, std::size_t k, unsigned max_deg, std::size_t max_terms) {
    std::vector<Term> terms;
    const std::size_t count = static_cast<std::size_t>(integer(0, static_cast<long>(max_terms)));
    for (std::size_t t = 0; t < count; ++t) {
      Monomial m;
      const unsigned deg = k == 0 ? 0 : static_cast<unsigned>(integer(0, max_deg));
      for (unsigned d = 0; d < deg; ++d) m = m * Monomial::variable(static_cast<std::size_t>(integer(0, static_cast<long>(k) - 1)));
      terms.push_back({m, Rational(nonzero(-2, 2))});
    }
    return Polynomial::from_terms(nvars, std::move(terms));
  }

  // Univariate with the given degree and a nonzero leading coefficient.
  Polynomial univariate_of_degree(int deg, bool zero_constant) {
    std::vector<Rational> c(static_cast<std::size_t>(deg) + 1);
    for (int e = 0; e < deg; ++e) c[static_cast<std::size_t>(e)] = integer(-2, 2);
    c.back() = nonzero(-2, 2);
    if (zero_constant) c.front() = 0;
    return univariate(c);
  }

  DependentFamilySpec dependent(std::size_t n) {
    DependentFamilySpec s;
    s.n = n;
    s.f = univariate_of_degree(static_cast<int>(integer(1, 3)), false);
    for (std::size_t j = 0; j < n / 2; ++j) {
      PairCoefficients pc;
      if (j == 0) {
        pc.a_odd = Polynomial::constant(n, nonzero(-2, 2));
        pc.a_even = Polynomial::constant(n, nonzero(-2, 2));
      } else {
        pc.a_odd = sparse(n, 2 * j, 1, 2);
        pc.a_even = sparse(n, 2 * j, 1, 2);
      }
      pc.b_odd = sparse(n, 2 * j, 2, 2);
      pc.b_even = sparse(n, 2 * j, 2, 2);
      s.pairs.push_back(std::move(pc));
    }
    return s;
  }

  EssenFamilySpec essen(std::size_t n, int max_g_degree = 2) {
    EssenFamilySpec s;
    s.n = n;
    s.a = univariate_of_degree(static_cast<int>(n) - 1, false);
    s.g = univariate_of_degree(static_cast<int>(integer(1, max_g_degree)), true);
    s.lambda = rational();
    return s;
  }

  Dim4FamilySpec dim4() {
    Dim4FamilySpec s;
    s.f = univariate_of_degree(static_cast<int>(integer(1, 2)), false);
    s.b1 = integer(-2, 2);
    s.v1 = nonzero(-2, 2);
    s.alpha_p = nonzero(-2, 2);
    s.lambda = rational();
    return s;
  }

 private:
  std::mt19937_64 rng_;
};

// The 3D almost-Hurwitz instance: n = 2, R = x3^2, lambda = -1, f = -t,
// a_odd = a_even = a.
inline HurwitzFieldSpec hurwitz_instance(std::size_t n, const Rational& a) {
  HurwitzFieldSpec h;
  h.base.n = n;
  h.base.f = Polynomial::parse("-x1", 1);
  for (std::size_t j = 0; j < n / 2; ++j) {
    PairCoefficients pc;
    pc.a_odd = Polynomial::constant(n, a);
    pc.a_even = Polynomial::constant(n, a);
    pc.b_odd = Polynomial(n);
    pc.b_even = Polynomial(n);
    h.base.pairs.push_back(std::move(pc));
  }
  h.lambda = -1;
  h.R = Polynomial::parse("x1^2", 1);
  return h;
}

}  // namespace nilmap::testing
