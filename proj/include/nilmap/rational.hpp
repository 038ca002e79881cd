#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace nilmap {

using Rational = mpq_class;
using Integer = mpz_class;

/// Parses "p", "-p", "p/q" or a terminating decimal "1.25" into a canonical
/// rational. Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

/// Canonical text: "p" when the denominator is one, otherwise "p/q".
std::string to_string(const Rational& q);

inline Rational make_rational(long num, long den = 1) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

}  // namespace nilmap
