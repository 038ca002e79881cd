#include "nilmap/rational.hpp"

#include <stdexcept>

namespace nilmap {

Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto valid_int = [](std::string_view t) {
    if (!t.empty() && (t.front() == '-' || t.front() == '+')) t.remove_prefix(1);
    if (t.empty()) return false;
    for (char c : t)
      if (c < '0' || c > '9') return false;
    return true;
  };
  if (auto dot = s.find('.'); dot != std::string::npos && s.find('/') == std::string::npos) {
    std::string whole = s.substr(0, dot), frac = s.substr(dot + 1);
    const bool neg = !whole.empty() && whole.front() == '-';
    if (!whole.empty() && (whole.front() == '-' || whole.front() == '+')) whole.erase(0, 1);
    if (whole.empty()) whole = "0";
    if (frac.empty() || !valid_int(whole) || !valid_int(frac) || frac.front() == '-' || frac.front() == '+')
      throw std::invalid_argument("malformed decimal: '" + s + "'");
    Integer scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    Rational q(Integer(whole) * scale + Integer(frac), scale);
    q.canonicalize();
    return neg ? Rational(-q) : q;
  }
  auto slash = s.find('/');
  std::string num = s.substr(0, slash);
  std::string den = slash == std::string::npos ? "1" : s.substr(slash + 1);
  if (!valid_int(num) || !valid_int(den) || den.front() == '-' || den.front() == '+')
    throw std::invalid_argument("malformed rational: '" + s + "'");
  if (num.front() == '+') num.erase(0, 1);
  Integer d(den);
  if (d == 0) throw std::invalid_argument("zero denominator: '" + s + "'");
  Rational q(Integer(num), d);
  q.canonicalize();
  return q;
}

std::string to_string(const Rational& q) { return q.get_str(); }

}  // namespace nilmap
