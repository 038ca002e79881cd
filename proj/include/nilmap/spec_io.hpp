#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "nilmap/families.hpp"

namespace nilmap {

struct CegmhSpec {
  std::size_t n = 3;
};

using FamilyParams =
    std::variant<DependentFamilySpec, HurwitzFieldSpec, EssenFamilySpec, Dim4FamilySpec, CegmhSpec>;

/// A parsed family file. `lambda` is the file's "lambda" entry if present.
struct FamilySpec {
  std::string family;
  FamilyParams params;
  std::optional<Rational> lambda;

  std::size_t dimension() const;
  /// The nilpotent part H; throws SpecError for hurwitz and cegmh.
  PolyMap nilpotent_part() const;
  /// The map a family file describes on its own: H for nilpotent families,
  /// F for hurwitz and cegmh.
  PolyMap primary_map() const;
  /// lambda X + H, through the family's structured program.
  MapProgram shifted_program(const Rational& lambda) const;
};

/// Polynomial from a JSON value: term list (short exponent vectors are padded
/// with zeros), text in x1..xn, a number, or for univariate fields an array of
/// coefficients c0, c1, ....
Polynomial polynomial_from_json(const nlohmann::json& j, std::size_t nvars);

FamilySpec parse_family_spec(const nlohmann::json& j);
FamilySpec load_family_spec(const std::filesystem::path& path);

}  // namespace nilmap
