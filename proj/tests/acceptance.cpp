// Acceptance checks. Usage: nilmap_acceptance [criterion...]; no arguments runs all.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "nilmap/dynamics.hpp"
#include "nilmap/families.hpp"
#include "nilmap/inversion.hpp"
#include "nilmap/jacobian.hpp"
#include "support.hpp"

using namespace nilmap;
using nilmap::testing::Draw;
using nilmap::testing::hurwitz_instance;
using nilmap::testing::P;
using nilmap::testing::Q;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      detail << "failed: " << what;
      pass = false;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool char_poly_is_tn(const PolyMatrix& j) {
  const auto cp = char_poly(j);
  for (std::size_t k = 0; k + 1 < cp.size(); ++k)
    if (!cp[k].is_zero()) return false;
  return cp.back() == Polynomial::constant(j.nvars(), 1);
}

bool annihilates(const std::vector<Rational>& c, const PolyMatrix& j) {
  bool nonzero = false;
  for (const auto& v : c) nonzero = nonzero || v != 0;
  if (!nonzero) return false;
  for (std::size_t col = 0; col < j.size(); ++col) {
    Polynomial acc(j.nvars());
    for (std::size_t r = 0; r < j.size(); ++r) acc += j(r, col) * c[r];
    if (!acc.is_zero()) return false;
  }
  return true;
}

constexpr int kDraws = 20;

// Shared by criteria 1 and 2: the same seeded draws.
template <class Body>
void for_each_draw(Body body) {
  Draw d(2024);
  for (std::size_t n : {2u, 4u, 6u})
    for (int i = 0; i < kDraws; ++i) body("dependent", n, build_dependent_H(d.dependent(n)));
  for (std::size_t n : {4u, 5u, 6u})
    for (int i = 0; i < kDraws; ++i) body("essen", n, build_essen_H(d.essen(n)));
  for (int i = 0; i < kDraws; ++i) body("dim4", std::size_t{4}, build_dim4_H(d.dim4()));
}

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  int count = 0, nilpotent = 0;
  for_each_draw([&](const char*, std::size_t, const PolyMap& h) {
    ++count;
    if (char_poly_is_tn(jacobian_of(h))) ++nilpotent;
  });
  const double dt = seconds_since(t0);
  o.require(nilpotent == count, "char_poly(JH) != t^n on some draw");
  o.require(dt < 60, "runtime above 60 s");
  o.detail << (o.pass ? "" : "; ") << nilpotent << "/" << count << " draws with char_poly == t^n in " << dt << " s";
  return o;
}

Outcome criterion2() {
  Outcome o;
  int dep = 0, dep_ok = 0, indep = 0, indep_ok = 0;
  for_each_draw([&](const char* family, std::size_t, const PolyMap& h) {
    const auto j = jacobian_of(h);
    const auto w = rows_dependent_over_R(j);
    if (std::string(family) == "dependent") {
      ++dep;
      if (w && annihilates(*w, j)) ++dep_ok;
    } else {
      ++indep;
      if (!w) ++indep_ok;
    }
  });
  o.require(dep_ok == dep, "dependent draw without a valid witness");
  o.require(indep_ok == indep, "essen/dim4 draw with dependent rows");
  o.detail << (o.pass ? "" : "; ") << "dependent witnesses " << dep_ok << "/" << dep << ", essen+dim4 independent "
           << indep_ok << "/" << indep;
  return o;
}

// right_identity is the exact structured F o G == X check, left_identity the
// expanded G o F == X check.
bool both_sided(const InverseBundle& b) { return b.right_identity && b.left_identity; }

Outcome criterion3() {
  Outcome o;
  int checked = 0;
  for (std::size_t n : {4u, 5u, 6u}) {
    EssenFamilySpec e;
    e.n = n;
    e.a = P(("x1^" + std::to_string(n - 1) + " + 1").c_str(), 1);
    e.g = P("x1", 1);
    e.lambda = -1;
    const auto b = formal_inverse(essen_H_program(e).shifted(e.lambda), e.lambda);
    o.require(both_sided(b), "essen n=" + std::to_string(n) + " inverse");
    o.require(build_essen_inverse(e) == b.G, "essen n=" + std::to_string(n) + " closed form");
    o.require(essen_sum_identity_check(e), "essen n=" + std::to_string(n) + " invariant identity");
    checked += 3;
  }
  {
    Dim4FamilySpec d;
    d.f = P("x1 + x1^3", 1);
    d.b1 = 1;
    d.v1 = 2;
    d.alpha_p = Q("1/2");
    d.lambda = -2;
    const auto b = formal_inverse(dim4_H_program(d).shifted(d.lambda), d.lambda);
    o.require(both_sided(b), "dim4 inverse");
    o.require(build_dim4_inverse(d) == b.G, "dim4 closed form");
    checked += 2;
  }
  DependentFamilySpec s2;
  s2.n = 2;
  s2.f = P("x1^3", 1);
  s2.pairs.push_back({P("1", 2), P("2", 2), Polynomial(2), Polynomial(2)});
  DependentFamilySpec s4;
  s4.n = 4;
  s4.f = P("x1^2", 1);
  s4.pairs.push_back({P("1", 4), P("2", 4), Polynomial(4), P("1", 4)});
  s4.pairs.push_back({P("x1", 4), P("1", 4), P("x2", 4), Polynomial(4)});
  for (const auto* s : {&s2, &s4}) {
    for (const Rational l : {Rational(1), Rational(-1), Rational(-2)}) {
      const std::string tag = "dependent n=" + std::to_string(s->n) + " lambda=" + to_string(l);
      const auto b = formal_inverse(dependent_H_program(*s).shifted(l), l);
      o.require(both_sided(b), tag + " inverse");
      o.require(dependent_inverse_program(*s, l).expand() == b.G, tag + " block back-substitution");
      checked += 2;
    }
  }
  // the printed dependent form is consistent for constant coefficients and b = 0
  for (const Rational l : {Rational(1), Rational(-1), Rational(-2)}) {
    o.require(build_dependent_inverse(s2, l).displayed_form_valid, "dependent displayed form, n=2");
    ++checked;
  }
  o.detail << (o.pass ? "" : "; ") << checked << " exact identities checked";
  return o;
}

Outcome criterion4() {
  Outcome o;
  Draw d(77);
  int n = 0, ok = 0;
  auto run = [&](const MapProgram& f, const Rational& l, const std::string& tag) {
    InverseOptions opts;
    opts.verify_left = false;
    const auto b = formal_inverse(f, l, opts);
    const auto p = preservation_check(b);
    const bool series = jbar_series_check(f, b);
    ++n;
    if (p.nilpotent && p.independent && series) ++ok;
    else o.require(false, tag);
  };
  for (int i = 0; i < kDraws / 2; ++i) {
    const auto e = d.essen(4, 1);
    run(essen_H_program(e).shifted(e.lambda), e.lambda, "essen draw " + std::to_string(i));
    const auto g = d.dim4();
    run(dim4_H_program(g).shifted(g.lambda), g.lambda, "dim4 draw " + std::to_string(i));
  }
  o.detail << (o.pass ? "" : "; ") << ok << "/" << n
           << " draws with J H_tilde nilpotent, rows independent and the J H_bar series identity";
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  ScanConfig cfg;
  cfg.num_samples = 10000;
  for (std::size_t n : {2u, 4u}) {
    const auto F = build_hurwitz_F(hurwitz_instance(n, Q("1/2")));
    const auto r = hurwitz_scan(F, cfg);
    const std::string tag = std::to_string(n + 1) + "D";
    o.require(r.violations.empty() && r.max_real_part_off_plane < 0, tag + " off-plane eigenvalue with Re >= 0");
    o.require(r.on_plane_ok(1e-9), tag + " on-plane |Re| above 1e-9");
    o.detail << (o.pass ? "" : "; ") << tag << " max Re off-plane " << r.max_real_part_off_plane << ", on-plane "
             << r.max_abs_real_part_on_plane << "; ";
  }
  const double dt = seconds_since(t0);
  o.require(dt < 30, "runtime above 30 s");
  o.detail << dt << " s";
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto h = hurwitz_instance(2, Q("1/2"));
  const Rational bound = alpha_bound(h);
  o.require(bound == Q("10/3"), "alpha_bound != 10/3");
  const Rational alpha = bound + Q("1/10");
  const auto rho = build_density(h, alpha);
  const auto S = divergence_numerator(build_hurwitz_F(h), rho);
  o.require(S.restrict_variable(2, 0).is_zero(), "S on the plane is not the zero polynomial");
  ScanConfig cfg;
  cfg.num_samples = 10000;
  const auto r = density_scan(S, cfg);
  o.require(r.violations.empty() && r.min_value_off_plane > 0, "S <= 0 at an off-plane sample");
  const bool integrable = integrability_check(rho);
  o.require(integrable, "alpha > 2 integrability");
  o.detail << (o.pass ? "" : "; ") << "bound " << to_string(bound) << ", alpha " << to_string(alpha) << ", S = "
           << S.to_string() << ", min S off-plane " << r.min_value_off_plane << ", integrable "
           << (integrable ? "yes" : "no");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto F = build_hurwitz_F(hurwitz_instance(2, Q("1/2")));
  ScanConfig cfg;
  AttractorOptions opts;
  opts.integrate.t_max = 500;
  opts.min_plane_distance = 0.05;
  const auto s = attractor_experiment(F, 100, cfg, opts);
  double worst = 0, worst_plane = 0;
  for (const auto& r : s.records) {
    worst = std::max(worst, r.final_norm);
    worst_plane = std::max(worst_plane, std::abs(r.final_plane_coordinate));
  }
  o.require(s.num_converged == s.num_traj, "off-plane trajectories above norm 1e-6 at t = 500");
  o.require(s.rotation_ok(1e-6), "on-plane norm drift or plane coordinate");
  o.detail << (o.pass ? "" : "; ") << s.num_converged << "/" << s.num_traj << " converged, largest final norm "
           << worst << ", largest |x3(500)| " << worst_plane << ", on-plane drift "
           << (s.rotation.empty() ? 0.0 : s.rotation[0].max_relative_norm_drift);
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto F = cegmh_field(3);
  bool zero = true;
  for (const auto& r : exponential_residual(F, cegmh_candidate(3))) zero = zero && r.is_zero();
  o.require(zero, "candidate residual");
  const auto cp = char_poly(jacobian_of(F));
  o.require(cp.size() == 4 && cp[0] == P("1", 3) && cp[1] == P("3", 3) && cp[2] == P("3", 3) && cp[3] == P("1", 3),
            "char_poly(JF) != (t+1)^3");
  const auto tr = integrate(F, std::vector<double>{18, -12, 1});
  o.require(tr.terminated == Termination::diverged && tr.final_norm > 1e3, "trajectory stayed below norm 1e3");
  o.detail << (o.pass ? "" : "; ") << "residual zero, char poly (t+1)^3, norm " << tr.final_norm << " at t = "
           << tr.times.back();
  return o;
}

const std::function<Outcome()> kCriteria[] = {criterion1, criterion2, criterion3, criterion4,
                                              criterion5, criterion6, criterion7, criterion8};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > 8) {
      std::fprintf(stderr, "unknown criterion '%s' (expected 1..8)\n", argv[i]);
      return 2;
    }
    which.push_back(k);
  }
  if (which.empty())
    for (int k = 1; k <= 8; ++k) which.push_back(k);
  bool all = true;
  for (int k : which) {
    Outcome o;
    try {
      o = kCriteria[k - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    std::printf("criterion %d: %s (%s)\n", k, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
