#include "wfvar/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_io.hpp"

namespace wfvar {

namespace detail {

namespace {

std::vector<double> numbers(const Json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(std::string(what) + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

ShVectorField sh_field(const Json& j, const char* what) {
  ShVectorField f;
  if (j.is_null()) return f;
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " needs one table per component");
  for (std::size_t k = 0; k < 3; ++k) f.coeffs[k] = numbers(j[k], what);
  return f;
}

}  // namespace

Json resolve(const Json& j, const std::filesystem::path& base, std::filesystem::path* new_base) {
  if (new_base) *new_base = base;
  if (!j.is_object() || !j.contains("file")) return j;
  const std::filesystem::path p = base / j.at("file").get<std::string>();
  if (new_base) *new_base = p.parent_path();
  try {
    return Json::parse(read_text_file(p));
  } catch (const Json::parse_error& e) {
    throw ConfigError("cannot parse " + p.string() + ": " + e.what());
  }
}

Vec3 vec3_from(const Json& j) {
  const auto v = numbers(j, "vector");
  if (v.size() != 3) throw ConfigError("vector must have three components");
  return {v[0], v[1], v[2]};
}

PiecewiseTrajectory trajectory_from(const Json& raw, ParticleParams particle, const std::filesystem::path& base) {
  const Json j = resolve(raw, base);
  if (j.contains("vertices")) {
    std::vector<Vertex> verts;
    for (const auto& row : j.at("vertices")) {
      const auto v = numbers(row, "vertex");
      if (v.size() != 4) throw ConfigError("vertex rows are [t, x, y, z]");
      verts.emplace_back(v[0], Vec3{v[1], v[2], v[3]});
    }
    return polygonal_from_vertices(verts, particle);
  }
  if (!j.contains("segments")) throw ConfigError("trajectory needs 'segments' or 'vertices'");
  std::vector<Segment> segs;
  for (const auto& s : j.at("segments")) {
    std::array<std::vector<double>, 3> c{numbers(s.at("x"), "x"), numbers(s.at("y"), "y"), numbers(s.at("z"), "z")};
    segs.emplace_back(s.at("t0").get<double>(), s.at("t1").get<double>(), std::move(c));
  }
  PiecewiseTrajectory out(std::move(segs), particle);
  require_valid(out, 1e-9);
  return out;
}

Json trajectory_json(const PiecewiseTrajectory& traj) {
  Json segs = Json::array();
  for (const auto& s : traj.segments()) {
    segs.push_back({{"t0", s.t0()}, {"t1", s.t1()}, {"x", s.coeffs()[0]}, {"y", s.coeffs()[1]}, {"z", s.coeffs()[2]}});
  }
  return {{"segments", segs}};
}

SeparationFamilyParams family_from(const Json& raw, const std::filesystem::path& base) {
  const Json j = resolve(raw, base);
  if (!j.contains("intervals") || !j.contains("t_final")) throw ConfigError("family needs 'intervals' and 't_final'");
  std::vector<SeparationFamilyParams::Interval> iv;
  for (const auto& e : j.at("intervals")) {
    iv.push_back({e.at("t_edge").get<double>(), sh_field(e.value("D_coeffs", Json()), "D_coeffs"),
                  sh_field(e.value("L_coeffs", Json()), "L_coeffs")});
  }
  return SeparationFamilyParams(std::move(iv), j.at("t_final").get<double>(), get_or(j, "continuous", true),
                                get_or(j, "project", true));
}

Json family_json(const SeparationFamilyParams& family) {
  Json iv = Json::array();
  for (const auto& e : family.intervals()) {
    iv.push_back({{"t_edge", e.t_edge},
                  {"D_coeffs", {e.D.coeffs[0], e.D.coeffs[1], e.D.coeffs[2]}},
                  {"L_coeffs", {e.L.coeffs[0], e.L.coeffs[1], e.L.coeffs[2]}}});
  }
  return {{"t_final", family.t_final()},
          {"continuous", family.continuous()},
          {"project", family.project()},
          {"intervals", iv}};
}

}  // namespace detail

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

detail::Json parse(const std::string& text) {
  try {
    return detail::Json::parse(text);
  } catch (const detail::Json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

PiecewiseTrajectory trajectory_from_json(const std::string& text, ParticleParams particle,
                                         const std::filesystem::path& base) {
  try {
    return detail::trajectory_from(parse(text), particle, base);
  } catch (const detail::Json::exception& e) {
    throw ConfigError(std::string("bad trajectory: ") + e.what());
  }
}

std::string trajectory_to_json(const PiecewiseTrajectory& traj) { return detail::trajectory_json(traj).dump(2); }

SeparationFamilyParams family_from_json(const std::string& text, const std::filesystem::path& base) {
  try {
    return detail::family_from(parse(text), base);
  } catch (const detail::Json::exception& e) {
    throw ConfigError(std::string("bad family: ") + e.what());
  }
}

std::string family_to_json(const SeparationFamilyParams& family) { return detail::family_json(family).dump(2); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw IoError("cannot write " + path.string());
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
  text_ += '\n';
}

void CsvTable::add_row(std::span<const double> values) {
  if (values.size() != columns_) throw DomainError("CSV row width does not match the header");
  for (std::size_t i = 0; i < values.size(); ++i) text_ += (i ? "," : "") + format_double(values[i]);
  text_ += '\n';
  ++rows_;
}

std::string CsvTable::str() const { return text_; }

}  // namespace wfvar
