#include "nilmap/jacobian.hpp"

#include <map>
#include <set>
#include <stdexcept>

namespace nilmap {

PolyMatrix::PolyMatrix(std::size_t n, std::size_t nvars)
    : n_(n), nvars_(nvars), e_(n * n, Polynomial(nvars)) {
  if (n == 0) throw DimensionError("PolyMatrix: empty matrix");
}

PolyMatrix::PolyMatrix(std::size_t n, std::vector<Polynomial> row_major)
    : n_(n), e_(std::move(row_major)) {
  if (n == 0 || e_.size() != n * n) throw DimensionError("PolyMatrix: need n*n entries");
  nvars_ = e_.front().nvars();
  for (const auto& p : e_)
    if (p.nvars() != nvars_) throw DimensionError("PolyMatrix: entries disagree on nvars");
}

PolyMatrix PolyMatrix::identity(std::size_t n, std::size_t nvars) {
  PolyMatrix m(n, nvars);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = Polynomial::constant(nvars, 1);
  return m;
}

bool PolyMatrix::is_zero() const {
  for (const auto& p : e_)
    if (!p.is_zero()) return false;
  return true;
}

Polynomial PolyMatrix::trace() const {
  Polynomial t(nvars_);
  for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

PolyMatrix PolyMatrix::operator+(const PolyMatrix& o) const {
  if (o.n_ != n_ || o.nvars_ != nvars_) throw DimensionError("matrix add: shape mismatch");
  PolyMatrix r = *this;
  for (std::size_t k = 0; k < e_.size(); ++k) r.e_[k] += o.e_[k];
  return r;
}

PolyMatrix PolyMatrix::operator*(const Rational& c) const {
  PolyMatrix r = *this;
  for (auto& p : r.e_) p *= c;
  return r;
}

PolyMatrix PolyMatrix::compose(std::span<const Polynomial> subst) const {
  std::vector<Polynomial> out;
  out.reserve(e_.size());
  for (const auto& p : e_) out.push_back(p.compose(subst));
  return PolyMatrix(n_, std::move(out));
}

std::vector<double> PolyMatrix::eval_float(std::span<const double> x) const {
  std::vector<double> out;
  out.reserve(e_.size());
  for (const auto& p : e_) out.push_back(p.eval_float(x));
  return out;
}

bool operator==(const PolyMatrix& a, const PolyMatrix& b) {
  return a.n_ == b.n_ && a.nvars_ == b.nvars_ && a.e_ == b.e_;
}

nlohmann::json PolyMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < n_; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < n_; ++j) row.push_back((*this)(i, j).to_json());
    rows.push_back(std::move(row));
  }
  return rows;
}

PolyMatrix PolyMatrix::from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("PolyMatrix JSON: expected rows");
  const std::size_t n = j.size();
  std::size_t nvars = 0;
  for (const auto& row : j)
    for (const auto& p : row)
      if (nvars == 0 && !p.empty()) nvars = p.front().at("exp").size();
  if (nvars == 0) nvars = 1;
  std::vector<Polynomial> entries;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != n) throw DimensionError("PolyMatrix JSON: not square");
    for (const auto& p : row) entries.push_back(Polynomial::from_json(p, nvars));
  }
  return PolyMatrix(n, std::move(entries));
}

nlohmann::json NilpotencyCertificate::to_json() const {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : char_poly_coeffs) coeffs.push_back(c.to_json());
  return {{"nilpotent", nilpotent}, {"index", index}, {"char_poly_coeffs", std::move(coeffs)}};
}

PolyMatrix jacobian_of(const PolyMap& f) {
  const std::size_t n = f.arity();
  PolyMatrix j(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) j(r, c) = f[r].partial(c);
  return j;
}

PolyMatrix mat_mul(const PolyMatrix& a, const PolyMatrix& b) {
  if (a.size() != b.size() || a.nvars() != b.nvars())
    throw DimensionError("mat_mul: shape mismatch");
  const std::size_t n = a.size();
  PolyMatrix r(n, a.nvars());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      if (a(i, k).is_zero()) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (b(k, j).is_zero()) continue;
        r(i, j) += a(i, k) * b(k, j);
      }
    }
  return r;
}

PolyMatrix mat_pow(const PolyMatrix& a, unsigned k) {
  PolyMatrix r = PolyMatrix::identity(a.size(), a.nvars());
  for (unsigned i = 0; i < k; ++i) r = mat_mul(r, a);
  return r;
}

std::vector<Polynomial> char_poly(const PolyMatrix& m) {
  const std::size_t n = m.size();
  const std::size_t nv = m.nvars();
  std::vector<Polynomial> c(n + 1, Polynomial(nv));
  c[n] = Polynomial::constant(nv, 1);
  PolyMatrix mk(n, nv);  // M_0 = 0
  for (std::size_t k = 1; k <= n; ++k) {
    PolyMatrix next = mat_mul(m, mk);
    for (std::size_t i = 0; i < n; ++i) next(i, i) += c[n - k + 1];
    mk = std::move(next);
    Polynomial tr = mat_mul(m, mk).trace();
    c[n - k] = tr * make_rational(-1, static_cast<long>(k));
  }
  return c;
}

NilpotencyCertificate is_nilpotent(const PolyMatrix& m) {
  NilpotencyCertificate cert;
  cert.char_poly_coeffs = char_poly(m);
  const std::size_t n = m.size();
  bool by_char_poly = true;
  for (std::size_t k = 0; k < n; ++k)
    if (!cert.char_poly_coeffs[k].is_zero()) by_char_poly = false;

  PolyMatrix p = m;
  std::size_t index = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (p.is_zero()) {
      index = k;
      break;
    }
    if (k < n) p = mat_mul(p, m);
  }
  const bool by_powers = index != 0;
  if (by_powers != by_char_poly)
    throw std::logic_error("nilpotency: characteristic polynomial and matrix powers disagree");
  cert.nilpotent = by_char_poly;
  cert.index = index;
  return cert;
}

std::vector<std::vector<Rational>> rational_nullspace(const std::vector<std::vector<Rational>>& a,
                                                      std::size_t cols) {
  // Clear denominators row by row, then fraction-free (Bareiss) echelon form.
  std::vector<std::vector<Integer>> m;
  m.reserve(a.size());
  for (const auto& row : a) {
    if (row.size() != cols) throw DimensionError("nullspace: ragged matrix");
    Integer l = 1;
    for (const auto& q : row) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
    std::vector<Integer> irow(cols);
    bool nonzero = false;
    for (std::size_t j = 0; j < cols; ++j) {
      irow[j] = row[j].get_num() * (l / row[j].get_den());
      nonzero = nonzero || irow[j] != 0;
    }
    if (nonzero) m.push_back(std::move(irow));
  }

  const std::size_t rows = m.size();
  std::vector<std::size_t> pivots;
  Integer prev = 1;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && m[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(m[p], m[r]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        m[i][j] = m[r][c] * m[i][j] - m[i][c] * m[r][j];
        mpz_divexact(m[i][j].get_mpz_t(), m[i][j].get_mpz_t(), prev.get_mpz_t());
      }
      m[i][c] = 0;
    }
    prev = m[r][c];
    pivots.push_back(c);
    ++r;
  }

  std::vector<bool> is_pivot(cols, false);
  for (auto c : pivots) is_pivot[c] = true;
  std::vector<std::vector<Rational>> basis;
  for (std::size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<Rational> x(cols, Rational(0));
    x[f] = 1;
    for (std::size_t k = pivots.size(); k-- > 0;) {
      const std::size_t pc = pivots[k];
      Rational s = 0;
      for (std::size_t j = pc + 1; j < cols; ++j)
        if (x[j] != 0 && m[k][j] != 0) s += Rational(m[k][j]) * x[j];
      x[pc] = -s / Rational(m[k][pc]);
    }
    basis.push_back(std::move(x));
  }
  return basis;
}

std::optional<std::vector<Rational>> rows_dependent_over_R(const PolyMatrix& m) {
  const std::size_t n = m.size();
  // One linear condition on c per (column, monomial) pair.
  std::set<std::vector<Rational>> eqs;
  for (std::size_t j = 0; j < n; ++j) {
    std::map<std::vector<std::uint16_t>, std::vector<Rational>> by_mono;
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& t : m(i, j).terms()) {
        std::vector<std::uint16_t> key(t.mono.exp.begin(), t.mono.exp.end());
        auto& row = by_mono[key];
        if (row.empty()) row.assign(n, Rational(0));
        row[i] = t.coef;
      }
    for (auto& [key, row] : by_mono) {
      // Scale so the first nonzero entry is 1; identical conditions collapse.
      Rational lead = 0;
      for (const auto& q : row)
        if (q != 0) {
          lead = q;
          break;
        }
      for (auto& q : row) q /= lead;
      eqs.insert(std::move(row));
    }
  }
  std::vector<std::vector<Rational>> a(eqs.begin(), eqs.end());
  auto basis = rational_nullspace(a, n);
  if (basis.empty()) return std::nullopt;
  auto c = basis.front();
  Rational lead = 0;
  for (const auto& q : c)
    if (q != 0) {
      lead = q;
      break;
    }
  for (auto& q : c) q /= lead;
  return c;
}

}  // namespace nilmap
