#include "nilmap/inversion.hpp"

#include <algorithm>

namespace nilmap {

namespace {

MapProgram minus_linear(const MapProgram& f, const Rational& lambda) {
  return MapProgram::make(f.arity(), [f, lambda](auto xs) {
    auto h = f.apply(xs);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = h[i] - xs[i] * lambda;
    return h;
  });
}

PolyMap scaled_identity(std::size_t n, const Rational& c) { return PolyMap::identity(n) * c; }

int degree_ceiling(int deg_f, std::size_t n) {
  long bound = 1;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    bound *= std::max(deg_f, 1);
    if (bound > 4096) return 4096;
  }
  return static_cast<int>(std::max(bound, 1L));
}

Polynomial homogeneous_part(const Polynomial& p, int k) {
  std::vector<Term> terms;
  for (const auto& t : p.terms())
    if (static_cast<int>(t.mono.degree) == k) terms.push_back(t);
  return Polynomial::from_terms(p.nvars(), std::move(terms));
}

// F(G(p)) == p at a fixed rational point; a cheap filter before the exact check.
bool fixes_sample_point(const MapProgram& Fp, const PolyMap& G) {
  const std::size_t n = G.arity();
  std::vector<Rational> pt;
  for (std::size_t i = 0; i < n; ++i) {
    Rational c(Integer(static_cast<long>(2 * i + 3)), Integer(static_cast<long>(3 * i + 5)));
    c.canonicalize();
    pt.push_back(c);
  }
  std::vector<Polynomial> image;
  for (const auto& v : G.eval_exact(pt)) image.push_back(Polynomial::constant(n, v));
  const auto back = Fp.apply(std::span<const Polynomial>(image));
  for (std::size_t i = 0; i < n; ++i)
    if (back[i] != Polynomial::constant(n, pt[i])) return false;
  return true;
}

void check_stop(const InverseOptions& opts) {
  if (opts.stop.stop_requested()) throw InversionError("formal_inverse: cancelled");
}

}  // namespace

nlohmann::json InverseBundle::to_json() const {
  return {{"F", F.to_json()},
          {"G", G.to_json()},
          {"lambda", to_string(lambda)},
          {"H_bar", H_bar.to_json()},
          {"H_tilde", H_tilde.to_json()},
          {"iterations_used", iterations_used},
          {"truncation_degree", truncation_degree},
          {"right_identity", right_identity},
          {"left_identity", left_identity}};
}

nlohmann::json PreservationReport::to_json() const {
  nlohmann::json j{{"nilpotent", nilpotent},
                   {"independent", independent},
                   {"nilpotency_index", nilpotency_index}};
  if (witness) {
    nlohmann::json w = nlohmann::json::array();
    for (const auto& c : *witness) w.push_back(to_string(c));
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

PolyMap compose_maps(const PolyMap& a, const PolyMap& b) { return a.compose(b); }

Polynomial scale_argument(const Polynomial& p, const Rational& c) {
  return p.compose(scaled_identity(p.nvars(), c).components());
}

PolyMap scale_argument(const PolyMap& m, const Rational& c) {
  return m.compose(scaled_identity(m.arity(), c));
}

InverseBundle formal_inverse(const PolyMap& F, const Rational& lambda, InverseOptions opts) {
  InverseBundle b = formal_inverse(MapProgram::from_map(F), lambda, std::move(opts));
  return b;
}

InverseBundle formal_inverse(const MapProgram& Fp, const Rational& lambda, InverseOptions opts) {
  if (lambda == 0) throw InversionError("formal_inverse: lambda must be nonzero");
  if (opts.max_iter == 0) throw InversionError("formal_inverse: max_iter must be positive");
  const std::size_t n = Fp.arity();
  const Rational gamma = 1 / lambda;
  InverseBundle out;
  out.F = Fp.expand();
  out.lambda = lambda;
  const PolyMap H = out.F - scaled_identity(n, lambda);
  if (!is_nilpotent(jacobian_of(H)).nilpotent)
    throw InversionError("formal_inverse: JH is not nilpotent");

  const PolyMap id = PolyMap::identity(n);
  // Invert F - F(0) (which fixes the origin) and translate afterwards.
  std::vector<Rational> offset;
  for (const auto& c : out.F.components()) offset.push_back(c.constant_term());
  const MapProgram Hp = MapProgram::make(n, [Fp, lambda, offset](auto xs) {
    auto h = Fp.apply(xs);
    for (std::size_t i = 0; i < h.size(); ++i)
      h[i] = h[i] - xs[i] * lambda - one_like(xs[i]) * offset[i];
    return h;
  });
  std::vector<Polynomial> shifted;
  for (std::size_t i = 0; i < n; ++i) shifted.push_back(id[i] - Polynomial::constant(n, offset[i]));
  const PolyMap shift(std::move(shifted));

  const int ceiling = degree_ceiling(out.F.degree(), n);
  int level = std::max(out.F.degree(), 1);

  // (I + gamma L)^{-1} with L = JH(0) nilpotent: a finite Neumann sum.
  const PolyMatrix jh = jacobian_of(H);
  std::vector<std::vector<Rational>> step(n, std::vector<Rational>(n));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) step[r][c] = -gamma * jh(r, c).constant_term();
  std::vector<std::vector<Rational>> resolvent(n, std::vector<Rational>(n));
  auto term = resolvent;
  for (std::size_t r = 0; r < n; ++r) term[r][r] = 1;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) resolvent[r][c] += term[r][c];
    auto next = resolvent;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        Rational acc = 0;
        for (std::size_t m = 0; m < n; ++m) acc += term[r][m] * step[m][c];
        next[r][c] = acc;
      }
    term = std::move(next);
  }

  // Lift G degree by degree: with G = G_{<k} + G_k + ..., the degree-k part of
  // the fixpoint equation reads (I + gamma L) G_k = gamma (X - H(G_{<k}))_k.
  std::vector<Polynomial> g(n, Polynomial(n));
  for (int k = 1;; ++k) {
    if (static_cast<std::size_t>(k) > opts.max_iter)
      throw InversionError("formal_inverse: no fixpoint within max_iter = " +
                           std::to_string(opts.max_iter) + " iterations");
    check_stop(opts);
    std::vector<Truncated> xs;
    for (const auto& gi : g) xs.emplace_back(gi, k);
    auto h = Hp.apply(std::span<const Truncated>(xs));
    ++out.iterations_used;

    std::vector<Polynomial> rhs;
    for (std::size_t i = 0; i < n; ++i) {
      Polynomial r = homogeneous_part(h[i].poly, k) * (-gamma);
      if (k == 1) r += id[i] * gamma;
      rhs.push_back(std::move(r));
    }
    bool vanished = true;
    for (std::size_t r = 0; r < n; ++r) {
      Polynomial gk(n);
      for (std::size_t c = 0; c < n; ++c)
        if (resolvent[r][c] != 0) gk += rhs[c] * resolvent[r][c];
      if (!gk.is_zero()) vanished = false;
      g[r] += gk;
    }

    if (!vanished && k < level) continue;
    PolyMap G = PolyMap(g).compose(shift);
    check_stop(opts);
    if (fixes_sample_point(Fp, G) && Fp.compose(G) == id) {
      out.G = std::move(G);
      out.truncation_degree = k;
      out.right_identity = true;
      break;
    }
    if (k >= ceiling)
      throw InversionError("formal_inverse: no polynomial inverse up to degree " +
                           std::to_string(ceiling));
    if (k >= level) level = std::min(2 * level, ceiling);
  }

  if (opts.verify_left) {
    check_stop(opts);
    out.left_identity = out.G.compose(out.F) == id;
    if (!out.left_identity) throw InversionError("formal_inverse: G o F != X");
  }

  out.H_tilde = out.G * lambda - id;
  out.H_bar = scale_argument(out.H_tilde, lambda) * gamma;
  if (scale_argument(out.H_bar, gamma) * lambda != out.H_tilde)
    throw InversionError("formal_inverse: normalization mismatch");
  return out;
}

bool jbar_series_check(const PolyMap& F, const InverseBundle& bundle) {
  return jbar_series_check(MapProgram::from_map(F), bundle);
}

bool jbar_series_check(const MapProgram& Fp, const InverseBundle& bundle) {
  const std::size_t n = Fp.arity();
  const Rational gamma = 1 / bundle.lambda;
  const MapProgram Hp = minus_linear(Fp, bundle.lambda);
  const PolyMap H = Hp.expand();
  const auto cert = is_nilpotent(jacobian_of(H) * gamma);
  if (!cert.nilpotent) return false;

  const PolyMap g_unit = PolyMap::identity(n) + bundle.H_bar;
  const PolyMatrix n_at_g = Hp.jacobian_at(g_unit.components()) * gamma;

  const PolyMatrix lhs = jacobian_of(bundle.H_bar);
  PolyMatrix rhs(n, n);
  PolyMatrix power = PolyMatrix::identity(n, n);
  for (std::size_t i = 1; i + 1 <= cert.index; ++i) {
    power = mat_mul(power, n_at_g);
    rhs = rhs + power * Rational(i % 2 == 0 ? 1 : -1);
  }
  return lhs == rhs;
}

PreservationReport preservation_check(const PolyMap& F, const Rational& lambda) {
  InverseOptions opts;
  opts.verify_left = false;
  return preservation_check(formal_inverse(F, lambda, opts));
}

PreservationReport preservation_check(const InverseBundle& bundle) {
  const PolyMatrix j = jacobian_of(bundle.H_tilde);
  const auto cert = is_nilpotent(j);
  PreservationReport r;
  r.nilpotent = cert.nilpotent;
  r.nilpotency_index = cert.index;
  r.witness = rows_dependent_over_R(j);
  r.independent = !r.witness.has_value();
  return r;
}

}  // namespace nilmap
