#include "nilmap/program.hpp"

namespace nilmap {

MapProgram MapProgram::from_map(const PolyMap& m) {
  MapProgram p;
  p.arity_ = m.arity();
  p.exact_ = [m](std::span<const Polynomial> xs) {
    std::vector<Polynomial> out;
    for (const auto& c : m.components()) out.push_back(c.compose(xs));
    return out;
  };
  p.trunc_ = [m](std::span<const Truncated> xs) {
    std::vector<Truncated> out;
    for (const auto& c : m.components()) out.push_back(eval_on<Truncated>(c, xs));
    return out;
  };
  p.dual_ = [m](std::span<const Dual> xs) {
    std::vector<Dual> out;
    for (const auto& c : m.components()) out.push_back(eval_on<Dual>(c, xs));
    return out;
  };
  return p;
}

std::vector<Polynomial> MapProgram::apply(std::span<const Polynomial> xs) const {
  if (xs.size() != arity_) throw DimensionError("program: argument count mismatch");
  return exact_(xs);
}

std::vector<Truncated> MapProgram::apply(std::span<const Truncated> xs) const {
  if (xs.size() != arity_) throw DimensionError("program: argument count mismatch");
  return trunc_(xs);
}

std::vector<Dual> MapProgram::apply(std::span<const Dual> xs) const {
  if (xs.size() != arity_) throw DimensionError("program: argument count mismatch");
  return dual_(xs);
}

PolyMatrix MapProgram::jacobian_at(std::span<const Polynomial> point) const {
  const std::size_t n = arity_;
  if (point.size() != n) throw DimensionError("jacobian_at: point length mismatch");
  const std::size_t nv = point.front().nvars();
  std::vector<Dual> xs;
  xs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Dual d{point[i], std::vector<Polynomial>(n, Polynomial(nv))};
    d.grad[i] = Polynomial::constant(nv, 1);
    xs.push_back(std::move(d));
  }
  auto out = apply(std::span<const Dual>(xs));
  PolyMatrix j(n, nv);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) j(r, c) = out[r].grad[c];
  return j;
}

PolyMap MapProgram::expand() const { return PolyMap(apply(PolyMap::identity(arity_).components())); }

PolyMap MapProgram::compose(const PolyMap& inner) const { return PolyMap(apply(inner.components())); }

MapProgram MapProgram::shifted(const Rational& lambda) const {
  MapProgram base = *this;
  return make(arity_, [base, lambda](auto xs) {
    auto h = base.apply(xs);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = xs[i] * lambda + h[i];
    return h;
  });
}

}  // namespace nilmap
