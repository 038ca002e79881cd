#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace nilmap {

/// Serializes JSON with every floating-point number printed to 17 significant
/// digits, so identical inputs give byte-identical reports.
std::string dump_json(const nlohmann::json& j, int indent = 2);

void write_text(const std::filesystem::path& path, const std::string& text);

struct RunManifest {
  std::string command;
  std::string spec_path;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  std::string toolkit_version = NILMAP_VERSION;
  std::int64_t wall_time_ms = 0;
  nlohmann::json parameters = nlohmann::json::object();

  nlohmann::json to_json() const;
};

}  // namespace nilmap
