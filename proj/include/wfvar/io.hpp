#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wfvar/core.hpp"
#include "wfvar/error.hpp"
#include "wfvar/shortrange.hpp"

namespace wfvar {

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// %.17g, which round-trips every double.
std::string format_double(double x);

/// Trajectory JSON: {"segments": [{"t0", "t1", "x": [...], "y": [...], "z": [...]}]}
/// with coefficients in powers of t - t0, or {"vertices": [[t, x, y, z], ...]}
/// for a polygon, or {"file": "relative/path.json"} resolved against `base`.
PiecewiseTrajectory trajectory_from_json(const std::string& text, ParticleParams particle,
                                         const std::filesystem::path& base = {});
std::string trajectory_to_json(const PiecewiseTrajectory& traj);

/// Family JSON: {"t_final", "continuous", "project", "intervals": [{"t_edge",
/// "D_coeffs": [[x...], [y...], [z...]], "L_coeffs": ...}]}.
SeparationFamilyParams family_from_json(const std::string& text, const std::filesystem::path& base = {});
std::string family_to_json(const SeparationFamilyParams& family);

std::string read_text_file(const std::filesystem::path& path);
/// Creates missing parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// CSV table with a fixed header; numbers through `format_double`.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  /// Appends one row; the cell count must match the header.
  void add_row(std::span<const double> values);
  std::size_t rows() const { return rows_; }
  std::string str() const;

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

}  // namespace wfvar
