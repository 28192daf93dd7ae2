#pragma once

#include <cstdint>
#include <string>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "particlesynth/error.hpp"
#include "particlesynth/io.hpp"

namespace particlesynth::jsonutil {

using Json = nlohmann::json;

inline Error schema_error(const std::string& path, const std::string& what) {
  return Error(Errc::kSchema, path + ": " + what);
}

inline Json parse(const std::string& text, const std::string& name) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::kSchema, name + ": not valid JSON: " + e.what());
  }
}

inline Json parse_file(const fs::path& path) { return parse(read_file(path), path.string()); }

inline const Json& member(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw schema_error(path, "expected object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw schema_error(path + "." + key, "missing");
  return *it;
}

/// Typed field access; errors carry the dotted path of the offending field.
template <typename T>
T get(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = member(obj, key, path);
  const std::string where = path + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw schema_error(where, "expected boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw schema_error(where, "expected string");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw schema_error(where, "expected number");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) throw schema_error(where, "expected non-negative integer");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw schema_error(where, "expected integer");
  }
  return v.get<T>();
}

template <typename T>
T get_or(const Json& obj, const std::string& key, const std::string& path, T fallback) {
  if (!obj.is_object()) throw schema_error(path, "expected object");
  if (!obj.contains(key)) return fallback;
  return get<T>(obj, key, path);
}

inline const Json& array(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = member(obj, key, path);
  if (!v.is_array()) throw schema_error(path + "." + key, "expected array");
  return v;
}

}  // namespace particlesynth::jsonutil
