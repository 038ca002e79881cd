#include <doctest.h>

#include <cmath>

#include "nilmap/polynomial.hpp"
#include "support.hpp"

using namespace nilmap;
using nilmap::testing::Draw;
using nilmap::testing::P;
using nilmap::testing::Q;

TEST_CASE("add") {
  CHECK(P("x1 + 1", 2) + P("-x1", 2) == P("1", 2));
  const auto p = P("3/2*x1^2*x3 - x2", 3);
  CHECK(Polynomial(3) + p == p);
  CHECK(P("x1*x2^2", 2) + P("x1*x2^2", 2) == P("2*x1*x2^2", 2));
  CHECK((P("x1", 2) - P("x1", 2)).terms().empty());
  CHECK_THROWS_AS(P("x1", 2) + P("x1", 3), DimensionError);
}

TEST_CASE("mul") {
  const auto s = P("x1 + x2*x3", 3);
  CHECK(s * s == P("x1^2 + 2*x1*x2*x3 + x2^2*x3^2", 3));
  CHECK((s * Polynomial(3)).is_zero());
  CHECK(s * P("1", 3) == s);
  CHECK_THROWS_AS(s * P("x1", 2), DimensionError);
}

TEST_CASE("partial") {
  CHECK(P("x1*x2^2", 2).partial(1) == P("2*x1*x2", 2));
  CHECK(P("7", 3).partial(2).is_zero());
  // f(a1 x1 + a2 x2) with f = t^3
  const auto inner = P("x1 + 2*x2", 2);
  const auto f = P("x1^3", 1).compose(std::vector<Polynomial>{inner});
  CHECK(f.partial(0) == inner * inner * Rational(3));
  CHECK_THROWS(P("x1", 2).partial(2));
}

TEST_CASE("compose") {
  const auto p = P("x1 + x2", 2);
  CHECK(p.compose(PolyMap::identity(2).components()) == p);
  // g(x2 - a(x1)) with g = t^2, a = x1^3
  const auto s = P("x2 - x1^3", 2);
  CHECK(P("x1^2", 1).compose(std::vector<Polynomial>{s}) == s * s);
  CHECK_THROWS(p.compose(std::vector<Polynomial>{P("x1", 2)}));
}

TEST_CASE("eval") {
  const std::vector<Rational> pt{2, 3};
  CHECK(P("x1^2 + x2", 2).eval_exact(pt) == 7);
  CHECK(Polynomial(2).eval_exact(pt) == 0);
  const auto c1 = P("-x1 + x3*(x1 + x2*x3)^2", 3);
  CHECK(c1.eval_exact(std::vector<Rational>{18, -12, 1}) == 18);
  CHECK(c1.eval_float(std::vector<double>{18, -12, 1}) == doctest::Approx(18.0).epsilon(1e-12));
  CHECK(P("x1^2 + x2", 2).eval_float(std::vector<double>{2, 3}) == 7.0);
  CHECK_THROWS(P("x1", 2).eval_exact(std::vector<Rational>{1}));
}

TEST_CASE("degree") {
  CHECK(Polynomial(2).degree() == -1);
  CHECK(P("x1^3", 1).degree() == 3);
  const auto s = P("x1 + x2*x3", 3);
  CHECK((s * s).degree() == 4);
}

TEST_CASE("text and json round trip") {
  const auto p = P("3/2*x1^2*x3 - x2", 3);
  CHECK(p.to_string() == "3/2*x1^2*x3 - x2");
  CHECK(Polynomial::parse(p.to_string(), 3) == p);
  const auto j = p.to_json();
  CHECK(j.dump() == R"([{"coef":"3/2","exp":[2,0,1]},{"coef":"-1","exp":[0,1,0]}])");
  CHECK(Polynomial::from_json(j) == p);
  CHECK(Polynomial(2).to_string() == "0");
  CHECK_THROWS(Polynomial::parse("x1 +* 2", 2));
  CHECK_THROWS(Polynomial::parse("x3", 2));
}

TEST_CASE("parse_rational") {
  CHECK(Q("-6/4") == Rational(-3, 2));
  CHECK(Q("3.5") == Rational(7, 2));
  CHECK(Q("-0.25") == Rational(-1, 4));
  CHECK_THROWS(Q("1/0"));
  CHECK_THROWS(Q("1/-2"));
  CHECK_THROWS(Q("abc"));
}

TEST_CASE("term cap") {
  const auto p = P("x1 + x2 + x3 + x4 + 1", 4);
  const auto saved = term_cap();
  set_term_cap(1000);
  CHECK_THROWS_AS(p.pow(12), TermCapExceeded);
  set_term_cap(saved);
  CHECK(p.pow(3).size() == 35);
}

TEST_CASE("ring properties on random inputs") {
  Draw d(7);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = d.sparse(3, 3, 3, 4), b = d.sparse(3, 3, 3, 4), c = d.sparse(3, 3, 3, 4);
    CHECK(a + b == b + a);
    CHECK(a * b == b * a);
    CHECK((a + b) + c == a + (b + c));
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK((a - a).is_zero());
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(a.partial(i).partial(j) == a.partial(j).partial(i));
    // canonical storage: terms strictly increasing, none zero
    const auto ab = a * b;
    const auto t = ab.terms();
    for (std::size_t k = 0; k < t.size(); ++k) {
      CHECK(t[k].coef != 0);
      if (k > 0) CHECK(GradedLexLess{}(t[k - 1].mono, t[k].mono));
    }
  }
}

TEST_CASE("composition properties on random inputs") {
  Draw d(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = d.sparse(2, 2, 3, 4);
    const PolyMap A({d.sparse(2, 2, 2, 3), d.sparse(2, 2, 2, 3)});
    const PolyMap B({d.sparse(2, 2, 2, 3), d.sparse(2, 2, 2, 3)});
    CHECK(p.compose(A.components()).compose(B.components()) == p.compose(A.compose(B).components()));
    const std::vector<Rational> v{Rational(d.integer(-3, 3)), Rational(1, 3)};
    CHECK(p.compose(A.components()).eval_exact(v) == p.eval_exact(A.eval_exact(v)));
    const std::vector<double> vf{v[0].get_d(), v[1].get_d()};
    const double exact = p.eval_exact(v).get_d();
    CHECK(p.eval_float(vf) == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("polymap") {
  const PolyMap id = PolyMap::identity(3);
  const PolyMap f({P("x1 + x2^2", 3), P("x2", 3), P("x3 - x1", 3)});
  CHECK(f.compose(id) == f);
  CHECK(id.compose(f) == f);
  CHECK(PolyMap::from_json(f.to_json()) == f);
  CHECK_THROWS(PolyMap({P("x1", 2)}));
}
