// JSON readers shared by the io and cli sources.
#pragma once

#include <filesystem>

#include <json.hpp>

#include "wfvar/core.hpp"
#include "wfvar/error.hpp"
#include "wfvar/shortrange.hpp"

namespace wfvar::detail {

using Json = nlohmann::json;

/// Follows {"file": path} references relative to `base`.
Json resolve(const Json& j, const std::filesystem::path& base, std::filesystem::path* new_base = nullptr);

PiecewiseTrajectory trajectory_from(const Json& j, ParticleParams particle, const std::filesystem::path& base);
Json trajectory_json(const PiecewiseTrajectory& traj);

SeparationFamilyParams family_from(const Json& j, const std::filesystem::path& base);
Json family_json(const SeparationFamilyParams& family);

Vec3 vec3_from(const Json& j);

/// Value of `key` or `fallback` when absent; wrong types raise ConfigError.
template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace wfvar::detail
