#include <doctest.h>

#include "nilmap/families.hpp"
#include "nilmap/jacobian.hpp"
#include "support.hpp"

using namespace nilmap;
using nilmap::testing::Draw;
using nilmap::testing::P;

namespace {

// det(tI - M) by cofactor expansion, with t as an extra last variable.
Polynomial laplace_det(const std::vector<std::vector<Polynomial>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  Polynomial acc(m[0][0].nvars());
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<Polynomial>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Polynomial> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(m[r][k]);
      minor.push_back(std::move(row));
    }
    Polynomial term = m[0][c] * laplace_det(minor);
    acc += c % 2 == 0 ? term : -term;
  }
  return acc;
}

std::vector<Polynomial> char_poly_by_minors(const PolyMatrix& a) {
  const std::size_t n = a.size(), v = a.nvars();
  const Polynomial t = Polynomial::variable(v + 1, v);
  std::vector<std::vector<Polynomial>> m(n, std::vector<Polynomial>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i][j] = (i == j ? t : Polynomial(v + 1)) - a(i, j).extend_vars(v + 1);
  const Polynomial det = laplace_det(m);
  std::vector<Polynomial> out(n + 1, Polynomial(v));
  for (const auto& term : det.terms()) {
    Monomial rest = term.mono;
    const auto k = rest.exp[v];
    rest.exp[v] = 0;
    rest.degree -= k;
    out[k] += Polynomial::monomial(v, rest, term.coef);
  }
  return out;
}

PolyMap cegmh() { return cegmh_field(3); }

DependentFamilySpec dependent_n2(const char* f) {
  DependentFamilySpec s;
  s.n = 2;
  s.f = P(f, 1);
  s.pairs.push_back({P("1", 2), P("1", 2), Polynomial(2), Polynomial(2)});
  return s;
}

}  // namespace

TEST_CASE("jacobian_of") {
  CHECK(jacobian_of(PolyMap::identity(3)) == PolyMatrix::identity(3, 3));
  const auto j = jacobian_of(build_dependent_H(dependent_n2("x1^2")));
  const auto s2 = P("2*x1 + 2*x2", 2);
  CHECK(j == PolyMatrix(2, {s2, s2, -s2, -s2}));
  CHECK(jacobian_of(cegmh()).trace() == P("-3", 3));
}

TEST_CASE("mat_mul and mat_pow") {
  const auto j = jacobian_of(build_dependent_H(dependent_n2("x1^2")));
  CHECK(mat_mul(j, PolyMatrix::identity(2, 2)) == j);
  CHECK(mat_pow(j, 2).is_zero());
  CHECK(mat_pow(j, 0) == PolyMatrix::identity(2, 2));
}

TEST_CASE("char_poly") {
  const auto z = char_poly(PolyMatrix(3, 2));
  CHECK(z.size() == 4);
  CHECK(z[3] == P("1", 2));
  for (std::size_t k = 0; k < 3; ++k) CHECK(z[k].is_zero());

  DependentFamilySpec s;
  s.n = 4;
  s.f = P("x1^3", 1);
  s.pairs.push_back({P("1", 4), P("1", 4), Polynomial(4), Polynomial(4)});
  s.pairs.push_back({P("x1", 4), P("x2^2", 4), Polynomial(4), Polynomial(4)});
  const auto jh = jacobian_of(build_dependent_H(s));
  const auto cp = char_poly(jh);
  CHECK(cp == char_poly_by_minors(jh));
  for (std::size_t k = 0; k < 4; ++k) CHECK(cp[k].is_zero());

  const auto ce = char_poly(jacobian_of(cegmh()));
  // (t + 1)^3
  CHECK(ce[0] == P("1", 3));
  CHECK(ce[1] == P("3", 3));
  CHECK(ce[2] == P("3", 3));
  CHECK(ce[3] == P("1", 3));
}

TEST_CASE("char_poly agrees with cofactor expansion on random matrices") {
  Draw d(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Polynomial> e;
    for (int k = 0; k < 9; ++k) e.push_back(d.sparse(2, 2, 2, 3));
    const PolyMatrix m(3, e);
    CHECK(char_poly(m) == char_poly_by_minors(m));
  }
}

TEST_CASE("is_nilpotent") {
  const auto zero = is_nilpotent(PolyMatrix(3, 3));
  CHECK(zero.nilpotent);
  CHECK(zero.index == 1);

  Dim4FamilySpec d4;
  d4.f = P("x1", 1);
  const auto c = is_nilpotent(jacobian_of(build_dim4_H(d4)));
  CHECK(c.nilpotent);
  CHECK(c.index <= 4);

  const auto ce = is_nilpotent(jacobian_of(cegmh()));
  CHECK_FALSE(ce.nilpotent);
  CHECK(ce.index == 0);
}

TEST_CASE("rows_dependent_over_R") {
  DependentFamilySpec s;
  s.n = 2;
  s.f = P("x1^3", 1);
  s.pairs.push_back({P("2", 2), P("3", 2), Polynomial(2), Polynomial(2)});
  const auto w = rows_dependent_over_R(jacobian_of(build_dependent_H(s)));
  REQUIRE(w.has_value());
  // proportional to (a1, a2) = (2, 3), normalized to a leading 1
  CHECK((*w)[0] == 1);
  CHECK((*w)[1] == Rational(3, 2));

  EssenFamilySpec e;
  e.a = P("x1^3", 1);
  e.g = P("x1", 1);
  CHECK_FALSE(rows_dependent_over_R(jacobian_of(build_essen_H(e))).has_value());

  const auto z = rows_dependent_over_R(PolyMatrix(3, 3));
  REQUIRE(z.has_value());
  CHECK(*z == std::vector<Rational>{1, 0, 0});
}

TEST_CASE("witness annihilates the rows on random dependent instances") {
  Draw d(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = d.dependent(4);
    const auto j = jacobian_of(build_dependent_H(s));
    const auto w = rows_dependent_over_R(j);
    REQUIRE(w.has_value());
    for (std::size_t col = 0; col < 4; ++col) {
      Polynomial acc(4);
      for (std::size_t r = 0; r < 4; ++r) acc += j(r, col) * (*w)[r];
      CHECK(acc.is_zero());
    }
  }
}

TEST_CASE("rational_nullspace") {
  const std::vector<std::vector<Rational>> a{{1, 2, 3}, {2, 4, 6}};
  const auto ns = rational_nullspace(a, 3);
  CHECK(ns.size() == 2);
  for (const auto& v : ns) CHECK(v[0] + 2 * v[1] + 3 * v[2] == 0);
  CHECK(rational_nullspace({{1, 0}, {0, 1}}, 2).empty());
}
