#pragma once

#include <optional>
#include <stdexcept>
#include <stop_token>
#include <vector>

#include <json.hpp>

#include "nilmap/jacobian.hpp"
#include "nilmap/polynomial.hpp"
#include "nilmap/program.hpp"

namespace nilmap {

class InversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inverse of F = lambda X + H with G = lambda^{-1}(X + H_tilde) and
/// (X + lambda^{-1} H)^{-1} = X + H_bar.
struct InverseBundle {
  PolyMap F;
  PolyMap G;
  Rational lambda;
  PolyMap H_bar;
  PolyMap H_tilde;
  std::size_t iterations_used = 0;
  /// Degree cap of the last truncated iteration level.
  int truncation_degree = 0;
  bool right_identity = false;  // F o G == X
  bool left_identity = false;   // G o F == X

  nlohmann::json to_json() const;
};

struct InverseOptions {
  std::size_t max_iter = 64;
  /// Also expand G o F; for large maps this is the dominant cost.
  bool verify_left = true;
  std::stop_token stop;
};

PolyMap compose_maps(const PolyMap& a, const PolyMap& b);

/// p(c X) for a scalar c.
Polynomial scale_argument(const Polynomial& p, const Rational& c);
PolyMap scale_argument(const PolyMap& m, const Rational& c);

/// Inverts F = lambda X + H (JH nilpotent) by solving G = lambda^{-1}(X - H(G))
/// one homogeneous degree at a time around the origin (after subtracting
/// F(0)), and stops once F o G == X holds exactly.
///
/// Throws InversionError when JH is not nilpotent, more than max_iter degrees
/// are needed, or the left check G o F == X fails.
InverseBundle formal_inverse(const PolyMap& F, const Rational& lambda, InverseOptions opts = {});
/// Same, evaluating F through a structured program.
InverseBundle formal_inverse(const MapProgram& F, const Rational& lambda, InverseOptions opts = {});

/// Checks J H_bar == sum_{i=1}^{d} (-1)^i N(G)^i for the normalized map
/// X + lambda^{-1} H, where N = lambda^{-1} JH, G = X + H_bar and N^{d+1} = 0.
bool jbar_series_check(const PolyMap& F, const InverseBundle& bundle);
bool jbar_series_check(const MapProgram& F, const InverseBundle& bundle);

struct PreservationReport {
  bool nilpotent = false;
  bool independent = false;
  std::optional<std::vector<Rational>> witness;
  std::size_t nilpotency_index = 0;

  nlohmann::json to_json() const;
};

/// Nilpotency and row independence of J H_tilde for F = lambda X + H.
PreservationReport preservation_check(const PolyMap& F, const Rational& lambda);
PreservationReport preservation_check(const InverseBundle& bundle);

}  // namespace nilmap
