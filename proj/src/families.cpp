#include "nilmap/families.hpp"

#include "nilmap/inversion.hpp"

namespace nilmap {

namespace {

Rational factorial(unsigned k) {
  Integer f = 1;
  for (unsigned i = 2; i <= k; ++i) f *= i;
  return Rational(f);
}

Rational sign_pow(unsigned i) { return i % 2 == 0 ? Rational(1) : Rational(-1); }

void require_univariate(const Polynomial& p, const char* name) {
  if (p.nvars() != 1) throw SpecError(std::string(name) + " must be univariate");
}

template <class R>
std::vector<R> dependent_eval(const DependentFamilySpec& s, std::span<const R> x) {
  const R one = one_like(x.front());
  std::vector<R> h;
  h.reserve(s.n);
  for (std::size_t j = 0; j < s.pairs.size(); ++j) {
    const auto& pc = s.pairs[j];
    R ao = eval_on<R>(pc.a_odd, x);
    R ae = eval_on<R>(pc.a_even, x);
    R arg = ao * x[2 * j] + ae * x[2 * j + 1];
    R fv = horner(s.f, arg, one);
    h.push_back(ae * fv + eval_on<R>(pc.b_odd, x));
    h.push_back(-(ao * fv) + eval_on<R>(pc.b_even, x));
  }
  return h;
}

template <class R>
std::vector<R> dependent_inverse_eval(const DependentFamilySpec& s, const Rational& lambda,
                                      std::span<const R> u) {
  const R one = one_like(u.front());
  const R zero = one * Rational(0);
  const Rational gamma = 1 / lambda;
  std::vector<R> x(s.n, zero);
  for (std::size_t j = 0; j < s.pairs.size(); ++j) {
    const auto& pc = s.pairs[j];
    std::span<const R> known(x);
    R ao = eval_on<R>(pc.a_odd, known);
    R ae = eval_on<R>(pc.a_even, known);
    R bo = eval_on<R>(pc.b_odd, known);
    R be = eval_on<R>(pc.b_even, known);
    // a_odd u_odd + a_even u_even = lambda * arg + a_odd b_odd + a_even b_even
    R arg = (ao * u[2 * j] + ae * u[2 * j + 1] - ao * bo - ae * be) * gamma;
    R fv = horner(s.f, arg, one);
    x[2 * j] = (u[2 * j] - ae * fv - bo) * gamma;
    x[2 * j + 1] = (u[2 * j + 1] + ao * fv - be) * gamma;
  }
  return x;
}

std::vector<Polynomial> derivatives(const Polynomial& a, std::size_t count) {
  std::vector<Polynomial> d{a};
  for (std::size_t k = 1; k < count; ++k) d.push_back(d.back().partial(0));
  return d;
}

template <class R>
std::vector<R> essen_eval(const EssenFamilySpec& s, const std::vector<Polynomial>& da,
                          std::span<const R> x) {
  const R one = one_like(x.front());
  const std::size_t n = s.n;
  R gs = horner(s.g, x[1] - horner(s.a, x[0], one), one);
  std::vector<R> h;
  h.reserve(n);
  h.push_back(gs);
  R gpow = gs;
  for (std::size_t i = 2; i <= n; ++i) {
    R term = horner(da[i - 1], x[0], one) * gpow * (sign_pow(i) / factorial(i - 1));
    h.push_back(i < n ? x[i] + term : term);
    if (i < n) gpow = gpow * gs;
  }
  return h;
}

template <class R>
std::vector<R> essen_inverse_eval(const EssenFamilySpec& s, const std::vector<Polynomial>& da,
                                  std::span<const R> u) {
  const R one = one_like(u.front());
  const std::size_t n = s.n;
  const Rational gamma = 1 / s.lambda;
  R inv = -horner(s.a, u[0] * gamma, one);
  Rational scale = gamma;  // 1 / lambda^{i-1}
  for (std::size_t i = 2; i <= n; ++i) {
    inv = inv + u[i - 1] * (sign_pow(i) * scale);
    scale *= gamma;
  }
  R psi = horner(s.g, inv, one);
  std::vector<R> x(n, one * Rational(0));
  x[0] = (u[0] - psi) * gamma;
  x[1] = inv + horner(s.a, x[0], one);
  R ppow = psi;
  for (std::size_t i = 2; i < n; ++i) {
    R term = horner(da[i - 1], x[0], one) * ppow * (sign_pow(i) / factorial(i - 1));
    x[i] = u[i - 1] - x[i - 1] * s.lambda - term;
    ppow = ppow * psi;
  }
  return x;
}

template <class R>
std::vector<R> dim4_eval(const Dim4FamilySpec& s, std::span<const R> v) {
  const R one = one_like(v.front());
  const R &x = v[0], &y = v[1], &z = v[2], &w = v[3];
  const Rational va = s.v1 * s.alpha_p;
  R quad = x * s.b1 + x * x * va;  // b1 x + v1 alpha x^2
  R ft = horner(s.f, (y + quad) * s.lambda, one);
  R p = one * s.b1 + x * (2 * va);
  return {-ft, p * ft + quad * s.lambda - z * s.v1 + w, -(ft * ft) * s.alpha_p,
          p * ft * s.lambda - z * (s.lambda * s.v1)};
}

template <class R>
std::vector<R> dim4_inverse_eval(const Dim4FamilySpec& s, std::span<const R> u) {
  const R one = one_like(u.front());
  const Rational gamma = 1 / s.lambda;
  const Rational va = s.v1 * s.alpha_p;
  R phi = u[1] - u[3] * gamma;
  R fphi = horner(s.f, phi, one);
  R x = (u[0] + fphi) * gamma;
  R z = (u[2] + fphi * fphi * s.alpha_p) * gamma;
  R p = one * s.b1 + x * (2 * va);
  R w = (u[3] - p * fphi * s.lambda + z * (s.lambda * s.v1)) * gamma;
  R y = phi * gamma - x * s.b1 - x * x * va;
  return {x, y, z, w};
}

// Checks both composition identities through structured programs, then
// cross-validates against the formal inverse.
PolyMap cross_validated_inverse(const MapProgram& h, const MapProgram& inv, const Rational& lambda,
                                const char* family) {
  const std::size_t n = h.arity();
  MapProgram f = h.shifted(lambda);
  PolyMap fx = f.expand();
  PolyMap g = inv.expand();
  const PolyMap id = PolyMap::identity(n);
  if (f.compose(g) != id || inv.compose(fx) != id)
    throw InversionError(std::string(family) + " inverse: back-substitution does not invert F");
  InverseOptions opts;
  opts.verify_left = false;  // G o F is established above for the identical map
  InverseBundle b = formal_inverse(f, lambda, opts);
  if (b.G != g)
    throw InversionError(std::string(family) + " inverse: disagrees with the formal inverse");
  return b.G;
}

}  // namespace

Polynomial univariate(const std::vector<Rational>& coeffs) {
  std::vector<Term> terms;
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    terms.push_back(Term{Monomial::variable(0, static_cast<std::uint16_t>(i)), coeffs[i]});
  return Polynomial::from_terms(1, std::move(terms));
}

void DependentFamilySpec::validate() const {
  if (n == 0 || n % 2 != 0) throw SpecError("dependent family: n must be even and positive");
  if (n > kMaxVars) throw SpecError("dependent family: n too large");
  if (pairs.size() != n / 2) throw SpecError("dependent family: need n/2 coefficient pairs");
  require_univariate(f, "f");
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const auto& pc = pairs[j];
    for (const Polynomial* p : {&pc.a_odd, &pc.a_even, &pc.b_odd, &pc.b_even}) {
      if (p->nvars() != n) throw SpecError("dependent family: coefficients must have nvars == n");
      if (!p->depends_only_on_first(2 * j))
        throw SpecError("dependent family: pair " + std::to_string(j + 1) +
                        " coefficients may only use x1..x" + std::to_string(2 * j));
    }
  }
}

void HurwitzFieldSpec::validate() const {
  base.validate();
  for (const auto& pc : base.pairs)
    if (!pc.b_odd.is_zero() || !pc.b_even.is_zero())
      throw SpecError("hurwitz field: b_i must vanish identically");
  if (lambda >= 0) throw SpecError("hurwitz field: lambda must be negative");
  f_coefficients();
  r_coefficients();
}

std::vector<Rational> HurwitzFieldSpec::f_coefficients() const {
  const Polynomial& f = base.f;
  if (f.is_zero()) throw SpecError("hurwitz field: f must be nonzero");
  const int d = f.degree();
  if (d % 2 == 0) throw SpecError("hurwitz field: f must have odd degree");
  std::vector<Rational> a;
  for (int e = 0; e <= d; ++e) {
    Rational c = f.coefficient(Monomial::variable(0, static_cast<std::uint16_t>(e)));
    if (e % 2 == 0) {
      if (c != 0) throw SpecError("hurwitz field: f may only contain odd powers");
    } else {
      if (c >= 0) throw SpecError("hurwitz field: every A_{2i+1} must be negative");
      a.push_back(c);
    }
  }
  return a;
}

std::vector<Rational> HurwitzFieldSpec::r_coefficients() const {
  require_univariate(R, "R");
  if (R.is_zero()) throw SpecError("hurwitz field: R must be nonzero");
  const int d = R.degree();
  if (d % 2 != 0) throw SpecError("hurwitz field: R must have even degree");
  std::vector<Rational> out;
  for (int e = 0; e <= d; ++e) {
    Rational c = R.coefficient(Monomial::variable(0, static_cast<std::uint16_t>(e)));
    if (e == 0 || e % 2 == 1) {
      if (c != 0) throw SpecError("hurwitz field: R may only contain even powers >= 2");
    } else {
      if (c <= 0) throw SpecError("hurwitz field: every d_{2l} must be positive");
      out.push_back(c);
    }
  }
  return out;
}

void EssenFamilySpec::validate() const {
  if (n < 4) throw SpecError("essen family: n must be at least 4");
  if (n > kMaxVars) throw SpecError("essen family: n too large");
  require_univariate(a, "a");
  require_univariate(g, "g");
  if (a.degree() != static_cast<int>(n) - 1) throw SpecError("essen family: deg a must equal n-1");
  if (g.degree() < 1) throw SpecError("essen family: deg g must be at least 1");
  if (g.constant_term() != 0) throw SpecError("essen family: g(0) must be 0");
  if (lambda == 0) throw SpecError("essen family: lambda must be nonzero");
}

void Dim4FamilySpec::validate() const {
  require_univariate(f, "f");
  if (v1 * alpha_p == 0) throw SpecError("dim4 family: v1 * alpha must be nonzero");
  if (lambda == 0) throw SpecError("dim4 family: lambda must be nonzero");
}

MapProgram dependent_H_program(const DependentFamilySpec& spec) {
  spec.validate();
  return MapProgram::make(spec.n, [spec](auto xs) { return dependent_eval(spec, xs); });
}

PolyMap build_dependent_H(const DependentFamilySpec& spec) { return dependent_H_program(spec).expand(); }

MapProgram dependent_inverse_program(const DependentFamilySpec& spec, const Rational& lambda) {
  spec.validate();
  if (lambda == 0) throw SpecError("lambda must be nonzero");
  return MapProgram::make(spec.n,
                          [spec, lambda](auto us) { return dependent_inverse_eval(spec, lambda, us); });
}

PolyMap dependent_inverse_displayed(const DependentFamilySpec& spec, const Rational& lambda) {
  spec.validate();
  if (lambda == 0) throw SpecError("lambda must be nonzero");
  const Rational gamma = 1 / lambda;
  const auto u = PolyMap::identity(spec.n);
  std::span<const Polynomial> us = u.components();
  const Polynomial one = Polynomial::constant(spec.n, 1);
  std::vector<Polynomial> out;
  for (std::size_t j = 0; j < spec.pairs.size(); ++j) {
    const auto& pc = spec.pairs[j];
    Polynomial ao = pc.a_odd.compose(us), ae = pc.a_even.compose(us);
    Polynomial fv = horner(spec.f, (ao * us[2 * j] + ae * us[2 * j + 1]) * gamma, one);
    out.push_back(us[2 * j] * gamma - ae * fv * gamma - pc.b_odd);
    out.push_back(us[2 * j + 1] * gamma + ao * fv * gamma - pc.b_even);
  }
  return PolyMap(std::move(out));
}

DependentInverse build_dependent_inverse(const DependentFamilySpec& spec, const Rational& lambda) {
  MapProgram h = dependent_H_program(spec);
  MapProgram f = h.shifted(lambda);
  const PolyMap id = PolyMap::identity(spec.n);
  DependentInverse out;
  PolyMap displayed = dependent_inverse_displayed(spec, lambda);
  out.displayed_form_valid = f.compose(displayed) == id;

  InverseOptions opts;
  opts.verify_left = false;
  InverseBundle formal = formal_inverse(f, lambda, opts);
  PolyMap blockwise = dependent_inverse_program(spec, lambda).expand();
  out.matches_formal_inverse = blockwise == formal.G;
  out.inverse = out.matches_formal_inverse ? blockwise : formal.G;
  return out;
}

PolyMap build_hurwitz_F(const HurwitzFieldSpec& spec) {
  spec.validate();
  const std::size_t n = spec.base.n;
  const std::size_t m = n + 1;
  const PolyMap id = PolyMap::identity(m);
  std::span<const Polynomial> x = id.components();
  const Polynomial one = Polynomial::constant(m, 1);
  std::vector<Polynomial> h = dependent_eval<Polynomial>(spec.base, x);
  Polynomial r = horner(spec.R, x[n], one);
  std::vector<Polynomial> out;
  out.reserve(m);
  for (std::size_t j = 0; j < n / 2; ++j) {
    out.push_back(-x[2 * j + 1] + r * (x[2 * j] * spec.lambda + h[2 * j]));
    out.push_back(x[2 * j] + r * (x[2 * j + 1] * spec.lambda + h[2 * j + 1]));
  }
  out.push_back(-(x[n] * r));
  return PolyMap(std::move(out));
}

Rational alpha_bound(const HurwitzFieldSpec& spec) {
  spec.validate();
  const auto a = spec.f_coefficients();
  if (a.size() != 1)
    throw SpecError("alpha_bound: requires f(T) = A_1 T (A_{2i+1} = 0 for i >= 1)");
  const Rational a1 = a.front();
  const Rational lambda = spec.lambda;
  const Rational n(static_cast<unsigned long>(spec.base.n));
  const Rational k(static_cast<unsigned long>(spec.k()));
  Rational bound = 2;
  bound = std::max(bound, Rational((3 - n * lambda) / 2));
  for (std::size_t j = 0; j < spec.base.pairs.size(); ++j) {
    const auto& pc = spec.base.pairs[j];
    if (!pc.a_odd.is_constant() || !pc.a_even.is_constant())
      throw SpecError("alpha_bound: a_{2j-1}, a_{2j} must be constants");
    const Rational ao = pc.a_odd.constant_term();
    const Rational ae = pc.a_even.constant_term();
    if (ao != ae && ao != -ae) throw SpecError("alpha_bound: requires a_{2j-1} = +-a_{2j}");
    const Rational a2 = ao * ao;
    if (!(a2 < lambda / a1))
      throw SpecError("alpha_bound: requires a_{2j-1}^2 < lambda/A_1 (pair " +
                      std::to_string(j + 1) + ")");
    bound = std::max(bound, Rational((2 * k + 1 - n * lambda) / (2 * (a2 * a1 - lambda))));
  }
  return bound;
}

Density build_density(const HurwitzFieldSpec& spec, const Rational& alpha) {
  const Rational bound = alpha_bound(spec);
  if (!(alpha > bound))
    throw SpecError("build_density: alpha must exceed the bound " + to_string(bound));
  const std::size_t m = spec.base.n + 1;
  Polynomial p(m);
  for (std::size_t i = 0; i + 1 < m; ++i) p += Polynomial::variable(m, i).pow(2);
  p += horner(spec.R, Polynomial::variable(m, m - 1), Polynomial::constant(m, 1));
  return Density{p, alpha};
}

MapProgram essen_H_program(const EssenFamilySpec& spec) {
  spec.validate();
  auto da = derivatives(spec.a, spec.n);
  return MapProgram::make(spec.n, [spec, da](auto xs) { return essen_eval(spec, da, xs); });
}

PolyMap build_essen_H(const EssenFamilySpec& spec) { return essen_H_program(spec).expand(); }

MapProgram essen_inverse_program(const EssenFamilySpec& spec) {
  spec.validate();
  auto da = derivatives(spec.a, spec.n);
  return MapProgram::make(spec.n, [spec, da](auto us) { return essen_inverse_eval(spec, da, us); });
}

PolyMap build_essen_inverse(const EssenFamilySpec& spec) {
  return cross_validated_inverse(essen_H_program(spec), essen_inverse_program(spec), spec.lambda,
                                 "essen");
}

Polynomial essen_invariant(const EssenFamilySpec& spec) {
  PolyMap f = essen_H_program(spec).shifted(spec.lambda).expand();
  const std::size_t n = spec.n;
  const Polynomial one = Polynomial::constant(n, 1);
  const Rational gamma = 1 / spec.lambda;
  Polynomial sum = -horner(spec.a, f[0] * gamma, one);
  Rational scale = gamma;
  for (std::size_t i = 2; i <= n; ++i) {
    sum += f[i - 1] * (sign_pow(i) * scale);
    scale *= gamma;
  }
  return sum;
}

bool essen_sum_identity_check(const EssenFamilySpec& spec) {
  const std::size_t n = spec.n;
  const Polynomial one = Polynomial::constant(n, 1);
  Polynomial rhs = Polynomial::variable(n, 1) - horner(spec.a, Polynomial::variable(n, 0), one);
  return essen_invariant(spec) == rhs;
}

MapProgram dim4_H_program(const Dim4FamilySpec& spec) {
  spec.validate();
  return MapProgram::make(4, [spec](auto xs) { return dim4_eval(spec, xs); });
}

PolyMap build_dim4_H(const Dim4FamilySpec& spec) { return dim4_H_program(spec).expand(); }

MapProgram dim4_inverse_program(const Dim4FamilySpec& spec) {
  spec.validate();
  return MapProgram::make(4, [spec](auto us) { return dim4_inverse_eval(spec, us); });
}

PolyMap build_dim4_inverse(const Dim4FamilySpec& spec) {
  return cross_validated_inverse(dim4_H_program(spec), dim4_inverse_program(spec), spec.lambda,
                                 "dim4");
}

Polynomial dim4_phi(const Dim4FamilySpec& spec) {
  PolyMap f = dim4_H_program(spec).shifted(spec.lambda).expand();
  return f[1] - f[3] * (1 / spec.lambda);
}

PolyMap cegmh_field(std::size_t n) {
  if (n < 3) throw SpecError("cegmh field: dimension must be at least 3");
  if (n > kMaxVars) throw SpecError("cegmh field: dimension too large");
  auto x = [n](std::size_t i) { return Polynomial::variable(n, i); };
  Polynomial s = x(0) + x(1) * x(2);
  Polynomial s2 = s * s;
  std::vector<Polynomial> out{-x(0) + x(2) * s2, -x(1) - s2};
  for (std::size_t i = 2; i < n; ++i) out.push_back(-x(i));
  return PolyMap(std::move(out));
}

}  // namespace nilmap
