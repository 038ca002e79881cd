#include "nilmap/spec_io.hpp"

#include <fstream>

namespace nilmap {

namespace {

Rational rational_from_json(const nlohmann::json& j, const std::string& key) {
  try {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(Integer(j.dump()));
  } catch (const std::invalid_argument& e) {
    throw SpecError("'" + key + "': " + e.what());
  }
  throw SpecError("'" + key + "' must be an integer or a \"p/q\" string");
}

const nlohmann::json& require(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw SpecError("missing key '" + key + "'");
  return j.at(key);
}

std::size_t read_n(const nlohmann::json& j, std::size_t fallback = 0) {
  if (!j.contains("n")) {
    if (fallback == 0) throw SpecError("missing key 'n'");
    return fallback;
  }
  const auto& v = j.at("n");
  if (!v.is_number_unsigned() || v.get<std::size_t>() == 0)
    throw SpecError("'n' must be a positive integer");
  return v.get<std::size_t>();
}

Polynomial field(const nlohmann::json& j, const std::string& key, std::size_t nvars) {
  try {
    return polynomial_from_json(require(j, key), nvars);
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    throw SpecError("'" + key + "': " + e.what());
  }
}

Polynomial r_field(const nlohmann::json& j) {
  const auto& r = require(j, "R");
  if (!r.is_object()) return field(j, "R", 1);
  const auto& d = require(r, "d");
  if (!d.is_array()) throw SpecError("'R.d' must be an array of [power, coefficient] pairs");
  std::vector<Term> terms;
  for (const auto& entry : d) {
    if (!entry.is_array() || entry.size() != 2) throw SpecError("'R.d' entries must be [power, coefficient]");
    const Rational p = rational_from_json(entry[0], "R.d power");
    if (p < 0 || p.get_den() != 1 || p > 0xffff) throw SpecError("'R.d' powers must be nonnegative integers");
    terms.push_back({Monomial::variable(0, static_cast<std::uint16_t>(p.get_num().get_ui())),
                     rational_from_json(entry[1], "R.d coefficient")});
  }
  return Polynomial::from_terms(1, std::move(terms));
}

DependentFamilySpec dependent_from_json(const nlohmann::json& j, std::size_t n) {
  DependentFamilySpec s;
  s.n = n;
  s.f = field(j, "f", 1);
  const auto& pairs = require(j, "pairs");
  if (!pairs.is_array()) throw SpecError("'pairs' must be an array");
  for (const auto& p : pairs) {
    PairCoefficients c;
    c.a_odd = field(p, "a_odd", n);
    c.a_even = field(p, "a_even", n);
    c.b_odd = p.contains("b_odd") ? field(p, "b_odd", n) : Polynomial(n);
    c.b_even = p.contains("b_even") ? field(p, "b_even", n) : Polynomial(n);
    s.pairs.push_back(std::move(c));
  }
  return s;
}

}  // namespace

Polynomial polynomial_from_json(const nlohmann::json& j, std::size_t nvars) {
  if (j.is_string()) {
    const std::string text = j.get<std::string>();
    // Univariate fields may be written in t.
    if (nvars == 1 && text.find('t') != std::string::npos && text.find('x') == std::string::npos) {
      std::string s = text;
      for (std::size_t pos = 0; (pos = s.find('t', pos)) != std::string::npos; pos += 2) s.replace(pos, 1, "x1");
      return Polynomial::parse(s, nvars);
    }
    return Polynomial::parse(text, nvars);
  }
  if (j.is_number_integer()) return Polynomial::constant(nvars, Rational(Integer(j.dump())));
  if (!j.is_array()) throw SpecError("polynomial must be a term list, a string or an integer");
  if (j.empty()) return Polynomial(nvars);
  if (!j.front().is_object()) {
    if (nvars != 1) throw SpecError("coefficient lists are only accepted for univariate fields");
    std::vector<Rational> c;
    for (const auto& v : j) c.push_back(rational_from_json(v, "coefficient"));
    return univariate(c);
  }
  nlohmann::json padded = j;
  for (auto& t : padded) {
    if (!t.is_object() || !t.contains("exp") || !t.at("exp").is_array())
      throw SpecError("polynomial term needs 'coef' and 'exp'");
    auto& e = t.at("exp");
    if (e.size() > nvars) throw SpecError("exponent vector longer than " + std::to_string(nvars));
    while (e.size() < nvars) e.push_back(0);
  }
  return Polynomial::from_json(padded, nvars);
}

std::size_t FamilySpec::dimension() const {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, HurwitzFieldSpec>) return s.base.n + 1;
        else if constexpr (std::is_same_v<T, Dim4FamilySpec>) return 4;
        else return s.n;
      },
      params);
}

PolyMap FamilySpec::nilpotent_part() const {
  if (auto* s = std::get_if<DependentFamilySpec>(&params)) return build_dependent_H(*s);
  if (auto* s = std::get_if<EssenFamilySpec>(&params)) return build_essen_H(*s);
  if (auto* s = std::get_if<Dim4FamilySpec>(&params)) return build_dim4_H(*s);
  throw SpecError("family '" + family + "' has no nilpotent part");
}

PolyMap FamilySpec::primary_map() const {
  if (auto* s = std::get_if<HurwitzFieldSpec>(&params)) return build_hurwitz_F(*s);
  if (auto* s = std::get_if<CegmhSpec>(&params)) return cegmh_field(s->n);
  return nilpotent_part();
}

MapProgram FamilySpec::shifted_program(const Rational& l) const {
  if (l == 0) throw SpecError("lambda must be nonzero");
  if (auto* s = std::get_if<DependentFamilySpec>(&params)) return dependent_H_program(*s).shifted(l);
  if (auto* s = std::get_if<EssenFamilySpec>(&params)) return essen_H_program(*s).shifted(l);
  if (auto* s = std::get_if<Dim4FamilySpec>(&params)) return dim4_H_program(*s).shifted(l);
  throw SpecError("family '" + family + "' is not of the form lambda X + H");
}

FamilySpec parse_family_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw SpecError("family spec must be a JSON object");
  FamilySpec out;
  const auto& fam = require(j, "family");
  if (!fam.is_string()) throw SpecError("'family' must be a string");
  out.family = fam.get<std::string>();
  if (j.contains("lambda")) out.lambda = rational_from_json(j.at("lambda"), "lambda");

  if (out.family == "dependent") {
    auto s = dependent_from_json(j, read_n(j));
    s.validate();
    out.params = std::move(s);
  } else if (out.family == "hurwitz") {
    HurwitzFieldSpec s;
    s.base = dependent_from_json(j, read_n(j));
    if (!out.lambda) throw SpecError("hurwitz family needs 'lambda'");
    s.lambda = *out.lambda;
    s.R = r_field(j);
    s.validate();
    out.params = std::move(s);
  } else if (out.family == "essen") {
    EssenFamilySpec s;
    s.n = read_n(j);
    s.a = field(j, "a", 1);
    s.g = field(j, "g", 1);
    if (out.lambda) s.lambda = *out.lambda;
    s.validate();
    out.params = std::move(s);
  } else if (out.family == "dim4") {
    Dim4FamilySpec s;
    if (read_n(j, 4) != 4) throw SpecError("dim4 family has n = 4");
    s.f = field(j, "f", 1);
    if (j.contains("b1")) s.b1 = rational_from_json(j.at("b1"), "b1");
    if (j.contains("v1")) s.v1 = rational_from_json(j.at("v1"), "v1");
    if (j.contains("alpha_p")) s.alpha_p = rational_from_json(j.at("alpha_p"), "alpha_p");
    if (out.lambda) s.lambda = *out.lambda;
    s.validate();
    out.params = std::move(s);
  } else if (out.family == "cegmh") {
    CegmhSpec s{read_n(j, 3)};
    if (s.n < 3 || s.n > kMaxVars) throw SpecError("cegmh family needs 3 <= n <= 16");
    out.params = s;
  } else {
    throw SpecError("unknown family '" + out.family + "'");
  }
  return out;
}

FamilySpec load_family_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return parse_family_spec(j);
}

}  // namespace nilmap
