#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "nilmap/jacobian.hpp"
#include "nilmap/polynomial.hpp"

namespace nilmap {

/// Polynomial arithmetic modulo terms of total degree above `cap`.
struct Truncated {
  Polynomial poly;
  int cap = 0;

  Truncated() = default;
  Truncated(Polynomial p, int max_degree) : poly(p.truncated(max_degree)), cap(max_degree) {}

  friend Truncated operator+(const Truncated& a, const Truncated& b) {
    return {a.poly + b.poly, std::min(a.cap, b.cap)};
  }
  friend Truncated operator-(const Truncated& a, const Truncated& b) {
    return {a.poly - b.poly, std::min(a.cap, b.cap)};
  }
  friend Truncated operator*(const Truncated& a, const Truncated& b) {
    int c = std::min(a.cap, b.cap);
    Truncated r;
    r.poly = Polynomial::mul_truncated(a.poly, b.poly, c);
    r.cap = c;
    return r;
  }
  friend Truncated operator*(const Truncated& a, const Rational& q) { return {a.poly * q, a.cap}; }
  Truncated operator-() const { return {-poly, cap}; }
};

/// First-order jet: value plus gradient with respect to seeded directions.
struct Dual {
  Polynomial value;
  std::vector<Polynomial> grad;

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r{a.value + b.value, a.grad};
    for (std::size_t k = 0; k < r.grad.size(); ++k) r.grad[k] += b.grad[k];
    return r;
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r{a.value - b.value, a.grad};
    for (std::size_t k = 0; k < r.grad.size(); ++k) r.grad[k] -= b.grad[k];
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r{a.value * b.value, {}};
    r.grad.reserve(a.grad.size());
    for (std::size_t k = 0; k < a.grad.size(); ++k) {
      Polynomial g = a.grad[k].is_zero() ? Polynomial(a.value.nvars()) : a.grad[k] * b.value;
      if (!b.grad[k].is_zero()) g += a.value * b.grad[k];
      r.grad.push_back(std::move(g));
    }
    return r;
  }
  friend Dual operator*(const Dual& a, const Rational& q) {
    Dual r{a.value * q, a.grad};
    for (auto& g : r.grad) g *= q;
    return r;
  }
  Dual operator-() const { return *this * Rational(-1); }
};

inline Dual one_like(const Dual& x) {
  return {Polynomial::constant(x.value.nvars(), 1),
          std::vector<Polynomial>(x.grad.size(), Polynomial(x.value.nvars()))};
}

inline Polynomial one_like(const Polynomial& x) { return Polynomial::constant(x.nvars(), 1); }
inline Truncated one_like(const Truncated& x) {
  return {Polynomial::constant(x.poly.nvars(), 1), x.cap};
}

template <class R>
R ring_pow(const R& base, unsigned k) {
  R result = one_like(base);
  R b = base;
  while (k > 0) {
    if (k & 1u) result = result * b;
    k >>= 1u;
    if (k > 0) b = b * b;
  }
  return result;
}

/// Evaluates p at ring elements xs (xs.size() >= used variables of p).
template <class R>
R eval_on(const Polynomial& p, std::span<const R> xs) {
  R one = one_like(xs.front());
  R acc = one * Rational(0);
  std::vector<std::vector<R>> powers(p.nvars());
  auto power = [&](std::size_t v, unsigned e) -> const R& {
    auto& cache = powers[v];
    if (cache.empty()) cache.push_back(one);
    while (cache.size() <= e) cache.push_back(cache.back() * xs[v]);
    return cache[e];
  };
  for (const auto& t : p.terms()) {
    R term = one * t.coef;
    for (std::size_t v = 0; v < p.nvars(); ++v)
      if (t.mono.exp[v] != 0) term = term * power(v, t.mono.exp[v]);
    acc = acc + term;
  }
  return acc;
}

/// A polynomial map kept as a procedure rather than expanded monomials.
///
/// Composing an expanded map with another map destroys any cancellation
/// structure (e.g. g(x2 - a(x1)) composed with an inverse collapses to a
/// low-degree form only if x2 - a(x1) is formed first). Programs evaluate
/// the defining formula over any ring, so composition happens in the
/// order the formula prescribes.
class MapProgram {
 public:
  using ExactFn = std::function<std::vector<Polynomial>(std::span<const Polynomial>)>;
  using TruncFn = std::function<std::vector<Truncated>(std::span<const Truncated>)>;
  using DualFn = std::function<std::vector<Dual>(std::span<const Dual>)>;

  MapProgram() = default;

  /// `fn` must be callable with std::span<const R> for R in {Polynomial, Truncated, Dual}.
  template <class Fn>
  static MapProgram make(std::size_t arity, Fn fn) {
    MapProgram p;
    p.arity_ = arity;
    p.exact_ = [fn](std::span<const Polynomial> xs) { return fn(xs); };
    p.trunc_ = [fn](std::span<const Truncated> xs) { return fn(xs); };
    p.dual_ = [fn](std::span<const Dual> xs) { return fn(xs); };
    return p;
  }

  static MapProgram from_map(const PolyMap& m);

  std::size_t arity() const { return arity_; }
  std::vector<Polynomial> apply(std::span<const Polynomial> xs) const;
  std::vector<Truncated> apply(std::span<const Truncated> xs) const;
  std::vector<Dual> apply(std::span<const Dual> xs) const;

  /// Jacobian of this map evaluated at `point` (entry (i,j) is dF_i/dx_j at point).
  PolyMatrix jacobian_at(std::span<const Polynomial> point) const;

  /// Evaluates at the coordinate variables, producing the expanded map.
  PolyMap expand() const;
  /// this o inner.
  PolyMap compose(const PolyMap& inner) const;
  /// x -> lambda * x + this(x).
  MapProgram shifted(const Rational& lambda) const;

 private:
  std::size_t arity_ = 0;
  ExactFn exact_;
  TruncFn trunc_;
  DualFn dual_;
};

}  // namespace nilmap
