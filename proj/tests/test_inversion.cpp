#include <doctest.h>

#include "nilmap/families.hpp"
#include "nilmap/inversion.hpp"
#include "support.hpp"

using namespace nilmap;
using nilmap::testing::Draw;
using nilmap::testing::P;

namespace {

EssenFamilySpec essen4(const Rational& lambda) {
  EssenFamilySpec e;
  e.a = P("x1^3", 1);
  e.g = P("x1", 1);
  e.lambda = lambda;
  return e;
}

Dim4FamilySpec dim4(const Rational& lambda) {
  Dim4FamilySpec d;
  d.f = P("x1", 1);
  d.lambda = lambda;
  return d;
}

PolyMap cegmh_H() {
  return PolyMap({P("x3*(x1 + x2*x3)^2", 3), P("-(x1 + x2*x3)^2", 3), P("0", 3)});
}

void check_bundle_invariants(const InverseBundle& b) {
  const auto id = PolyMap::identity(b.F.arity());
  CHECK(b.F.compose(b.G) == id);
  CHECK(b.G.compose(b.F) == id);
  CHECK(b.right_identity);
  CHECK(b.H_tilde == b.G * b.lambda - id);
  CHECK(b.H_tilde == scale_argument(b.H_bar, 1 / b.lambda) * b.lambda);
}

}  // namespace

TEST_CASE("compose_maps") {
  const PolyMap a({P("x1 + x2^2", 2), P("x1*x2", 2)});
  CHECK(compose_maps(a, PolyMap::identity(2)) == a);
  CHECK(compose_maps(PolyMap::identity(2), a) == a);
  const PolyMap b({P("x2", 2), P("x1 - 1", 2)});
  CHECK(compose_maps(a, b) == PolyMap({P("x2 + (x1 - 1)^2", 2), P("x2*(x1 - 1)", 2)}));
}

TEST_CASE("formal_inverse of a linear map") {
  for (const Rational l : {Rational(1), Rational(-3), Rational(2, 5)}) {
    const auto b = formal_inverse(PolyMap::identity(3) * l, l);
    CHECK(b.G == PolyMap::identity(3) * (1 / l));
    CHECK(b.iterations_used == 1);
    CHECK(b.left_identity);
    check_bundle_invariants(b);
  }
}

TEST_CASE("formal_inverse with a cubic nilpotent part") {
  const auto F = PolyMap::identity(3) + cegmh_H();
  const auto b = formal_inverse(F, 1);
  check_bundle_invariants(b);
  CHECK(b.left_identity);
  // the inverse of X + H with the square-zero structure here is X - H
  CHECK(b.G == PolyMap::identity(3) - cegmh_H());
}

TEST_CASE("formal_inverse matches the essen back-substitution") {
  for (const Rational l : {Rational(1), Rational(-1)}) {
    const auto e = essen4(l);
    const auto b = formal_inverse(essen_H_program(e).shifted(l), l);
    CHECK(b.G == build_essen_inverse(e));
    check_bundle_invariants(b);
  }
}

TEST_CASE("formal_inverse with a constant term") {
  const PolyMap F({P("2*x1 + 1", 2), P("2*x2 + x1^2 - 3", 2)});
  const auto b = formal_inverse(F, 2);
  check_bundle_invariants(b);
}

TEST_CASE("formal_inverse errors") {
  CHECK_THROWS_AS(formal_inverse(cegmh_field(3), 1), InversionError);
  CHECK_THROWS_AS(formal_inverse(PolyMap::identity(2), 0), InversionError);
  InverseOptions few;
  few.max_iter = 2;
  const auto e = essen4(1);
  CHECK_THROWS_AS(formal_inverse(essen_H_program(e).shifted(1), 1, few), InversionError);
  std::stop_source src;
  src.request_stop();
  InverseOptions stopped;
  stopped.stop = src.get_token();
  CHECK_THROWS_AS(formal_inverse(essen_H_program(e).shifted(1), 1, stopped), InversionError);
}

TEST_CASE("bundle json") {
  const auto b = formal_inverse(PolyMap::identity(2) * Rational(2), 2);
  const auto j = b.to_json();
  CHECK(j.at("lambda") == "2");
  CHECK(j.at("right_identity") == true);
  CHECK(PolyMap::from_json(j.at("G")) == b.G);
}

TEST_CASE("jbar series identity") {
  const auto zero = formal_inverse(PolyMap::identity(3), 1);
  CHECK(zero.H_bar == PolyMap::identity(3) - PolyMap::identity(3));
  CHECK(jbar_series_check(PolyMap::identity(3), zero));

  const auto e = essen4(1);
  const auto fe = essen_H_program(e).shifted(1);
  CHECK(jbar_series_check(fe, formal_inverse(fe, 1)));

  const auto d = dim4(-2);
  const auto fd = dim4_H_program(d).shifted(-2);
  CHECK(jbar_series_check(fd, formal_inverse(fd, -2)));

  // a tampered H_bar breaks the identity
  auto bad = formal_inverse(fe, 1);
  bad.H_bar = bad.H_bar + PolyMap({P("x1^2", 4), P("0", 4), P("0", 4), P("0", 4)});
  CHECK_FALSE(jbar_series_check(fe, bad));
}

TEST_CASE("preservation") {
  const auto e = essen4(-1);
  const auto pe = preservation_check(essen_H_program(e).shifted(-1).expand(), -1);
  CHECK(pe.nilpotent);
  CHECK(pe.independent);
  CHECK_FALSE(pe.witness.has_value());

  const auto d = dim4(-2);
  const auto pd = preservation_check(dim4_H_program(d).shifted(-2).expand(), -2);
  CHECK(pd.nilpotent);
  CHECK(pd.independent);

  DependentFamilySpec s;
  s.n = 4;
  s.f = P("x1^2", 1);
  s.pairs.push_back({P("1", 4), P("2", 4), Polynomial(4), P("1", 4)});
  s.pairs.push_back({P("x1", 4), P("1", 4), P("x2", 4), Polynomial(4)});
  const auto ps = preservation_check(dependent_H_program(s).shifted(-2).expand(), -2);
  CHECK(ps.nilpotent);
  CHECK_FALSE(ps.independent);
  REQUIRE(ps.witness.has_value());
  CHECK(ps.to_json().at("witness").size() == 4);
}

TEST_CASE("inverse identities on random essen and dim4 instances") {
  Draw d(99);
  for (int trial = 0; trial < 6; ++trial) {
    const auto e = d.essen(4, 1);
    const auto b = formal_inverse(essen_H_program(e).shifted(e.lambda), e.lambda);
    check_bundle_invariants(b);
    const auto g = d.dim4();
    const auto c = formal_inverse(dim4_H_program(g).shifted(g.lambda), g.lambda);
    check_bundle_invariants(c);
    CHECK(c.G == build_dim4_inverse(g));
  }
}
