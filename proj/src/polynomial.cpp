#include "nilmap/polynomial.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <unordered_map>

namespace nilmap {

namespace {

std::size_t initial_term_cap() {
  if (const char* env = std::getenv("NILMAP_TERM_CAP")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 1'000'000;
}

std::atomic<std::size_t>& cap_storage() {
  static std::atomic<std::size_t> cap{initial_term_cap()};
  return cap;
}

using Accumulator = std::unordered_map<Monomial, Rational, MonomialHash>;

std::vector<Term> drain(Accumulator& acc) {
  std::vector<Term> out;
  out.reserve(acc.size());
  for (auto& [m, c] : acc)
    if (c != 0) out.push_back(Term{m, std::move(c)});
  std::sort(out.begin(), out.end(),
            [](const Term& a, const Term& b) { return GradedLexLess{}(a.mono, b.mono); });
  return out;
}

}  // namespace

std::size_t term_cap() { return cap_storage().load(); }
void set_term_cap(std::size_t cap) { cap_storage().store(cap); }

Monomial Monomial::variable(std::size_t i, std::uint16_t power) {
  Monomial m;
  m.exp[i] = power;
  m.degree = power;
  return m;
}

Monomial Monomial::from_exponents(std::span<const unsigned> e) {
  if (e.size() > kMaxVars) throw DimensionError("too many variables");
  Monomial m;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] > 0xffff) throw std::out_of_range("exponent too large");
    m.exp[i] = static_cast<std::uint16_t>(e[i]);
    m.degree += e[i];
  }
  return m;
}

Monomial Monomial::operator*(const Monomial& o) const {
  Monomial r;
  for (std::size_t i = 0; i < kMaxVars; ++i) {
    unsigned s = unsigned(exp[i]) + o.exp[i];
    if (s > 0xffff) throw std::overflow_error("exponent overflow");
    r.exp[i] = static_cast<std::uint16_t>(s);
  }
  r.degree = degree + o.degree;
  return r;
}

std::size_t MonomialHash::operator()(const Monomial& m) const noexcept {
  std::uint64_t h = 1469598103934665603ull;
  for (auto e : m.exp) {
    h ^= e;
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

Polynomial::Polynomial(std::size_t nvars) : nvars_(nvars) {
  if (nvars == 0 || nvars > kMaxVars)
    throw DimensionError("nvars must be in 1.." + std::to_string(kMaxVars));
}

Polynomial Polynomial::constant(std::size_t nvars, const Rational& c) {
  Polynomial p(nvars);
  if (c != 0) p.terms_.push_back(Term{Monomial{}, c});
  return p;
}

Polynomial Polynomial::variable(std::size_t nvars, std::size_t i) {
  Polynomial p(nvars);
  if (i >= nvars) throw DimensionError("variable index out of range");
  p.terms_.push_back(Term{Monomial::variable(i), Rational(1)});
  return p;
}

Polynomial Polynomial::monomial(std::size_t nvars, const Monomial& m, const Rational& c) {
  Polynomial p(nvars);
  for (std::size_t i = nvars; i < kMaxVars; ++i)
    if (m.exp[i] != 0) throw DimensionError("monomial uses a variable beyond nvars");
  if (c != 0) p.terms_.push_back(Term{m, c});
  return p;
}

Polynomial Polynomial::from_terms(std::size_t nvars, std::vector<Term> terms) {
  Polynomial p(nvars);
  Accumulator acc;
  acc.reserve(terms.size());
  for (auto& t : terms) {
    for (std::size_t i = nvars; i < kMaxVars; ++i)
      if (t.mono.exp[i] != 0) throw DimensionError("term uses a variable beyond nvars");
    acc[t.mono] += t.coef;
  }
  p.terms_ = drain(acc);
  return p;
}

bool Polynomial::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_[0].mono.degree == 0);
}

int Polynomial::degree() const {
  return terms_.empty() ? -1 : static_cast<int>(terms_.back().mono.degree);
}

int Polynomial::degree_in(std::size_t i) const {
  if (terms_.empty()) return -1;
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, int(t.mono.exp[i]));
  return d;
}

Rational Polynomial::coefficient(const Monomial& m) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), m, [](const Term& t, const Monomial& x) {
    return GradedLexLess{}(t.mono, x);
  });
  if (it != terms_.end() && it->mono == m) return it->coef;
  return Rational(0);
}

Rational Polynomial::constant_term() const { return coefficient(Monomial{}); }

bool Polynomial::depends_only_on_first(std::size_t k) const {
  for (const auto& t : terms_)
    for (std::size_t i = k; i < nvars_; ++i)
      if (t.mono.exp[i] != 0) return false;
  return true;
}

void Polynomial::check_same(const Polynomial& o, const char* op) const {
  if (nvars_ != o.nvars_)
    throw DimensionError(std::string(op) + ": nvars mismatch (" + std::to_string(nvars_) + " vs " +
                         std::to_string(o.nvars_) + ")");
}

void Polynomial::check_cap(std::size_t n) {
  if (n > term_cap())
    throw TermCapExceeded("intermediate polynomial has " + std::to_string(n) +
                          " terms, above the cap of " + std::to_string(term_cap()));
}

Polynomial Polynomial::operator-() const {
  Polynomial r = *this;
  for (auto& t : r.terms_) t.coef = -t.coef;
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  check_same(o, "add");
  std::vector<Term> out;
  out.reserve(terms_.size() + o.terms_.size());
  auto a = terms_.begin();
  auto b = o.terms_.begin();
  GradedLexLess less;
  while (a != terms_.end() && b != o.terms_.end()) {
    if (less(a->mono, b->mono)) {
      out.push_back(std::move(*a++));
    } else if (less(b->mono, a->mono)) {
      out.push_back(*b++);
    } else {
      Rational c = a->coef + b->coef;
      if (c != 0) out.push_back(Term{a->mono, std::move(c)});
      ++a;
      ++b;
    }
  }
  for (; a != terms_.end(); ++a) out.push_back(std::move(*a));
  for (; b != o.terms_.end(); ++b) out.push_back(*b);
  terms_ = std::move(out);
  check_cap(terms_.size());
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) { return *this += -o; }

Polynomial& Polynomial::operator*=(const Polynomial& o) {
  *this = *this * o;
  return *this;
}

Polynomial& Polynomial::operator*=(const Rational& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) t.coef *= c;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  return Polynomial::mul_truncated(a, b, -1);
}

Polynomial Polynomial::mul_truncated(const Polynomial& a, const Polynomial& b, int max_degree) {
  a.check_same(b, "mul");
  Polynomial r(a.nvars_);
  if (a.terms_.empty() || b.terms_.empty()) return r;
  const bool bounded = max_degree >= 0;
  if (b.terms_.size() == 1 && b.terms_[0].mono.degree == 0 && !bounded) {
    r = a;
    return r *= b.terms_[0].coef;
  }
  Accumulator acc;
  acc.reserve(std::min<std::size_t>(a.terms_.size() * b.terms_.size(), term_cap()) + 1);
  Rational prod;
  for (const auto& ta : a.terms_) {
    if (bounded && int(ta.mono.degree) > max_degree) break;
    for (const auto& tb : b.terms_) {
      if (bounded && int(ta.mono.degree + tb.mono.degree) > max_degree) break;
      mpq_mul(prod.get_mpq_t(), ta.coef.get_mpq_t(), tb.coef.get_mpq_t());
      auto [it, inserted] = acc.try_emplace(ta.mono * tb.mono, prod);
      if (!inserted) it->second += prod;
    }
    check_cap(acc.size());
  }
  r.terms_ = drain(acc);
  return r;
}

Polynomial Polynomial::truncated(int max_degree) const {
  Polynomial r(nvars_);
  for (const auto& t : terms_) {
    if (int(t.mono.degree) > max_degree) break;
    r.terms_.push_back(t);
  }
  return r;
}

Polynomial Polynomial::pow(unsigned k) const {
  Polynomial result = constant(nvars_, 1);
  Polynomial base = *this;
  while (k > 0) {
    if (k & 1u) result = result * base;
    k >>= 1u;
    if (k > 0) base = base * base;
  }
  return result;
}

bool operator==(const Polynomial& a, const Polynomial& b) {
  if (a.nvars_ != b.nvars_ || a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i)
    if (!(a.terms_[i].mono == b.terms_[i].mono) || a.terms_[i].coef != b.terms_[i].coef) return false;
  return true;
}

Polynomial Polynomial::partial(std::size_t i) const {
  if (i >= nvars_) throw DimensionError("partial: variable index out of range");
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) {
    unsigned e = t.mono.exp[i];
    if (e == 0) continue;
    Term d{t.mono, t.coef * e};
    d.mono.exp[i] = static_cast<std::uint16_t>(e - 1);
    d.mono.degree -= 1;
    out.push_back(std::move(d));
  }
  return from_terms(nvars_, std::move(out));
}

namespace {

// Horner-style recursive substitution: groups terms by the exponent of
// variable v and combines the group results with powers of subst[v].
class Composer {
 public:
  Composer(std::span<const Polynomial> subst, std::size_t out_nvars)
      : subst_(subst), out_nvars_(out_nvars), powers_(subst.size()) {}

  Polynomial run(std::vector<const Term*> terms, std::size_t v) {
    Polynomial zero(out_nvars_);
    if (terms.empty()) return zero;
    if (v == subst_.size()) {
      Rational c = 0;
      for (const Term* t : terms) c += t->coef;
      return Polynomial::constant(out_nvars_, c);
    }
    std::map<unsigned, std::vector<const Term*>> groups;
    for (const Term* t : terms) groups[t->mono.exp[v]].push_back(t);
    Polynomial result = zero;
    for (auto& [e, group] : groups) {
      Polynomial inner = run(std::move(group), v + 1);
      if (inner.is_zero()) continue;
      result += e == 0 ? inner : inner * power(v, e);
    }
    return result;
  }

 private:
  const Polynomial& power(std::size_t v, unsigned e) {
    auto& cache = powers_[v];
    if (cache.empty()) cache.push_back(Polynomial::constant(out_nvars_, 1));
    while (cache.size() <= e) cache.push_back(cache.back() * subst_[v]);
    return cache[e];
  }

  std::span<const Polynomial> subst_;
  std::size_t out_nvars_;
  std::vector<std::vector<Polynomial>> powers_;
};

}  // namespace

Polynomial Polynomial::compose(std::span<const Polynomial> subst) const {
  if (subst.size() != nvars_)
    throw DimensionError("compose: expected " + std::to_string(nvars_) + " substitutes, got " +
                         std::to_string(subst.size()));
  const std::size_t out = subst.front().nvars();
  for (const auto& s : subst)
    if (s.nvars() != out) throw DimensionError("compose: substitutes disagree on nvars");
  std::vector<const Term*> ptrs;
  ptrs.reserve(terms_.size());
  for (const auto& t : terms_) ptrs.push_back(&t);
  Composer c(subst, out);
  return c.run(std::move(ptrs), 0);
}

Polynomial Polynomial::restrict_variable(std::size_t i, const Rational& value) const {
  if (i >= nvars_) throw DimensionError("restrict_variable: index out of range");
  std::vector<Polynomial> subst;
  for (std::size_t k = 0; k < nvars_; ++k)
    subst.push_back(k == i ? constant(nvars_, value) : variable(nvars_, k));
  return compose(subst);
}

Polynomial Polynomial::extend_vars(std::size_t nvars) const {
  if (nvars < nvars_) throw DimensionError("extend_vars: cannot shrink");
  Polynomial r(nvars);
  r.terms_ = terms_;
  return r;
}

Rational Polynomial::eval_exact(std::span<const Rational> point) const {
  if (point.size() != nvars_) throw DimensionError("eval_exact: point length mismatch");
  Rational sum = 0;
  for (const auto& t : terms_) {
    Rational v = t.coef;
    for (std::size_t i = 0; i < nvars_; ++i) {
      if (t.mono.exp[i] == 0) continue;
      Rational p;
      mpz_pow_ui(p.get_num_mpz_t(), point[i].get_num_mpz_t(), t.mono.exp[i]);
      mpz_pow_ui(p.get_den_mpz_t(), point[i].get_den_mpz_t(), t.mono.exp[i]);
      v *= p;
    }
    sum += v;
  }
  return sum;
}

double Polynomial::eval_float(std::span<const double> point) const {
  if (point.size() != nvars_) throw DimensionError("eval_float: point length mismatch");
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coef.get_d();
    for (std::size_t i = 0; i < nvars_; ++i) {
      for (unsigned k = 0; k < t.mono.exp[i]; ++k) v *= point[i];
    }
    sum += v;
  }
  return sum;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const Rational& c = it->coef;
    bool neg = c < 0;
    Rational mag = neg ? Rational(-c) : c;
    if (first) {
      if (neg) out += "-";
    } else {
      out += neg ? " - " : " + ";
    }
    first = false;
    std::string vars;
    for (std::size_t i = 0; i < nvars_; ++i) {
      unsigned e = it->mono.exp[i];
      if (e == 0) continue;
      if (!vars.empty()) vars += "*";
      vars += "x" + std::to_string(i + 1);
      if (e > 1) vars += "^" + std::to_string(e);
    }
    if (vars.empty()) {
      out += nilmap::to_string(mag);
    } else if (mag == 1) {
      out += vars;
    } else {
      out += nilmap::to_string(mag) + "*" + vars;
    }
  }
  return out;
}

namespace {

class Parser {
 public:
  Parser(std::string_view s, std::size_t nvars) : s_(s), nvars_(nvars) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("polynomial parse error at offset " + std::to_string(pos_) + ": " +
                                what);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::string digits() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected digits");
    return std::string(s_.substr(start, pos_ - start));
  }

  Polynomial expr() {
    Polynomial acc(nvars_);
    bool neg = accept('-');
    if (!neg) accept('+');
    Polynomial t = term();
    acc = neg ? -t : t;
    for (;;) {
      if (accept('+')) {
        acc += term();
      } else if (accept('-')) {
        acc -= term();
      } else {
        return acc;
      }
    }
  }

  Polynomial term() {
    Polynomial acc = factor();
    for (;;) {
      if (accept('*')) {
        acc = acc * factor();
      } else if (accept('/')) {
        Rational d{Integer(digits())};
        if (d == 0) fail("division by zero");
        acc *= Rational(1) / d;
      } else {
        return acc;
      }
    }
  }

  Polynomial factor() {
    Polynomial base = atom();
    if (accept('^')) {
      unsigned long e = std::stoul(digits());
      base = base.pow(static_cast<unsigned>(e));
    }
    return base;
  }

  Polynomial atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expr();
      if (!accept(')')) fail("expected ')'");
      return p;
    }
    if (c == 'x') {
      ++pos_;
      unsigned long idx = std::stoul(digits());
      if (idx < 1 || idx > nvars_) fail("variable x" + std::to_string(idx) + " out of range");
      return Polynomial::variable(nvars_, idx - 1);
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      return Polynomial::constant(nvars_, Rational(Integer(digits())));
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view s_;
  std::size_t nvars_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial Polynomial::parse(std::string_view text, std::size_t nvars) {
  if (nvars == 0 || nvars > kMaxVars) throw DimensionError("parse: bad nvars");
  return Parser(text, nvars).parse();
}

nlohmann::json Polynomial::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    nlohmann::json exps = nlohmann::json::array();
    for (std::size_t i = 0; i < nvars_; ++i) exps.push_back(it->mono.exp[i]);
    arr.push_back({{"coef", nilmap::to_string(it->coef)}, {"exp", std::move(exps)}});
  }
  return arr;
}

Polynomial Polynomial::from_json(const nlohmann::json& j, std::size_t nvars) {
  if (!j.is_array()) throw std::invalid_argument("polynomial JSON must be an array of terms");
  std::vector<Term> terms;
  for (const auto& t : j) {
    if (!t.is_object() || !t.contains("coef") || !t.contains("exp"))
      throw std::invalid_argument("polynomial term needs 'coef' and 'exp'");
    const auto& e = t.at("exp");
    if (!e.is_array() || e.size() != nvars)
      throw DimensionError("exponent vector length must be " + std::to_string(nvars));
    std::vector<unsigned> exps;
    for (const auto& x : e) {
      if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<long long>() >= 0))
        throw std::invalid_argument("exponents must be nonnegative integers");
      exps.push_back(x.get<unsigned>());
    }
    const auto& c = t.at("coef");
    Rational q = c.is_string() ? parse_rational(c.get<std::string>())
                 : c.is_number_integer() ? Rational(Integer(c.dump()))
                                         : throw std::invalid_argument("coef must be a string");
    terms.push_back(Term{Monomial::from_exponents(exps), q});
  }
  return from_terms(nvars, std::move(terms));
}

Polynomial Polynomial::from_json(const nlohmann::json& j) {
  std::size_t nvars = 1;
  if (j.is_array() && !j.empty() && j.front().is_object() && j.front().contains("exp") &&
      j.front().at("exp").is_array())
    nvars = j.front().at("exp").size();
  return from_json(j, nvars);
}

PolyMap::PolyMap(std::vector<Polynomial> components) : comps_(std::move(components)) {
  if (comps_.empty()) throw DimensionError("PolyMap needs at least one component");
  for (const auto& c : comps_)
    if (c.nvars() != comps_.size())
      throw DimensionError("PolyMap must be square: component nvars " + std::to_string(c.nvars()) +
                           " vs arity " + std::to_string(comps_.size()));
}

PolyMap PolyMap::identity(std::size_t n) {
  std::vector<Polynomial> c;
  for (std::size_t i = 0; i < n; ++i) c.push_back(Polynomial::variable(n, i));
  return PolyMap(std::move(c));
}

PolyMap PolyMap::compose(const PolyMap& inner) const {
  if (inner.arity() != arity()) throw DimensionError("compose: arity mismatch");
  std::vector<Polynomial> out;
  out.reserve(arity());
  for (const auto& c : comps_) out.push_back(c.compose(inner.comps_));
  return PolyMap(std::move(out));
}

PolyMap PolyMap::operator+(const PolyMap& o) const {
  if (o.arity() != arity()) throw DimensionError("map add: arity mismatch");
  std::vector<Polynomial> out;
  for (std::size_t i = 0; i < arity(); ++i) out.push_back(comps_[i] + o.comps_[i]);
  return PolyMap(std::move(out));
}

PolyMap PolyMap::operator-(const PolyMap& o) const {
  if (o.arity() != arity()) throw DimensionError("map sub: arity mismatch");
  std::vector<Polynomial> out;
  for (std::size_t i = 0; i < arity(); ++i) out.push_back(comps_[i] - o.comps_[i]);
  return PolyMap(std::move(out));
}

PolyMap PolyMap::operator*(const Rational& c) const {
  std::vector<Polynomial> out;
  for (const auto& p : comps_) out.push_back(p * c);
  return PolyMap(std::move(out));
}

bool operator==(const PolyMap& a, const PolyMap& b) { return a.comps_ == b.comps_; }

int PolyMap::degree() const {
  int d = -1;
  for (const auto& c : comps_) d = std::max(d, c.degree());
  return d;
}

std::vector<double> PolyMap::eval_float(std::span<const double> x) const {
  std::vector<double> out;
  out.reserve(arity());
  for (const auto& c : comps_) out.push_back(c.eval_float(x));
  return out;
}

std::vector<Rational> PolyMap::eval_exact(std::span<const Rational> x) const {
  std::vector<Rational> out;
  out.reserve(arity());
  for (const auto& c : comps_) out.push_back(c.eval_exact(x));
  return out;
}

nlohmann::json PolyMap::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : comps_) arr.push_back(c.to_json());
  return arr;
}

PolyMap PolyMap::from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("PolyMap JSON must be a nonempty array");
  std::vector<Polynomial> comps;
  for (const auto& c : j) comps.push_back(Polynomial::from_json(c, j.size()));
  return PolyMap(std::move(comps));
}

}  // namespace nilmap
