#include "nilmap/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace nilmap {

namespace {

void emit(const nlohmann::json& j, int indent, int depth, std::string& out) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        break;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string s(buf);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      out += s;
      break;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      if (std::all_of(j.begin(), j.end(), [](const auto& v) { return v.is_primitive(); })) {
        out += "[";
        bool first = true;
        for (const auto& v : j) {
          if (!first) out += indent > 0 ? ", " : ",";
          first = false;
          emit(v, 0, 0, out);
        }
        out += "]";
        break;
      }
      out += "[";
      out += nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad;
        emit(v, indent, depth + 1, out);
      }
      out += nl;
      out += close_pad + "]";
      break;
    }
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad + nlohmann::json(k).dump() + (indent > 0 ? ": " : ":");
        emit(v, indent, depth + 1, out);
      }
      out += nl;
      out += close_pad + "}";
      break;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
  std::string out;
  emit(j, indent, 0, out);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},         {"spec_path", spec_path},
          {"seed", seed},               {"outputs", outputs},
          {"toolkit_version", toolkit_version}, {"wall_time_ms", wall_time_ms},
          {"parameters", parameters}};
}

}  // namespace nilmap
