#pragma once

#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bodyshape/errors.hpp"

namespace bodyshape::detail {

// Parses one JSONL line into an object, rejecting duplicate top-level keys
// (which nlohmann would otherwise silently overwrite).
inline nlohmann::json parse_object_line(std::string_view line, std::size_t line_number) {
  std::set<std::string> keys;
  std::string duplicate;
  auto callback = [&](int depth, nlohmann::json::parse_event_t event, nlohmann::json& parsed) {
    if (depth == 1 && event == nlohmann::json::parse_event_t::key) {
      const auto key = parsed.get<std::string>();
      if (!keys.insert(key).second && duplicate.empty()) duplicate = key;
    }
    return true;
  };
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line, callback);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Format, std::string("malformed JSON: ") + e.what(), line_number);
  }
  if (!duplicate.empty()) throw Error(ErrorKind::Format, "duplicate key '" + duplicate + "'", line_number);
  if (!doc.is_object()) throw Error(ErrorKind::Format, "line is not a JSON object", line_number);
  return doc;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace bodyshape::detail
