#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wfvar/core.hpp"
#include "wfvar/farfield.hpp"
#include "wfvar/io.hpp"
#include "wfvar/optimizer.hpp"
#include "wfvar/shortrange.hpp"

namespace wfvar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

struct GahScanSettings {
  double t_start = -10.0;
  double t_end = 10.0;
  int t_count = 200;
  /// Random unit directions drawn from the scenario seed.
  int directions = 32;
  double R = 0.0;
  /// Residuals above tol * max|q| are counted in the summary.
  double tol = 1e-10;
};

struct FluxSettings {
  std::vector<double> times{0.0};
  double R = 100.0;
  int n_theta = 16;
  int n_phi = 32;
  FieldMode mode = FieldMode::TimeSymmetric;
};

struct PartnerSettings {
  int n_theta = 4;
  int n_phi = 6;
  std::vector<double> t1;
  PartnerOptions options;
};

struct SewingSettings {
  ChainLink seed{2, 0.0};
  ChainDirection direction = ChainDirection::Forward;
  int count = 10;
};

struct MinimizeSettings {
  MinimizeOptions options;
  int nodes_per_segment = 4;
  std::vector<double> breaks1;
  std::vector<double> breaks2;
  bool free_break_times = false;
};

/// Parsed scenario file. Times and lengths are in natural units (c = 1).
struct Scenario {
  int version = 1;
  std::filesystem::path base_dir;
  std::array<ParticleParams, 2> particles{ParticleParams{1.0, 1.0}, ParticleParams{1.0, -1.0}};
  std::array<std::optional<PiecewiseTrajectory>, 2> trajectories;
  /// Windows default to the trajectory domains when absent.
  std::optional<BoundaryData> boundary;
  std::optional<SeparationFamilyParams> family;
  /// Reference partner from which a polygonal-pair family is derived.
  std::optional<PiecewiseTrajectory> family_reference;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 1;
  GahScanSettings gah_scan;
  FluxSettings flux;
  PartnerSettings partner;
  SewingSettings sewing;
  MinimizeSettings minimize;
};

/// Throws ConfigError / IoError on malformed or unreadable files.
Scenario load_scenario(const std::filesystem::path& path);

const std::vector<std::string>& commands();

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<double> tol;
  bool quiet = false;
};

/// Runs one command on a scenario file. Returns 0 on success, 1 on scenario
/// or domain errors (one diagnostic line on `err`), 2 on an unknown command.
int run(const std::string& command, const std::filesystem::path& scenario, const RunOptions& opts,
        std::ostream& out, std::ostream& err);

/// Command-line entry: `<command> --scenario <path> [--out <dir>] [--tol <x>] [--quiet]`.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// CSV of a minimizer or verification report: one row per segment
/// (kind 0) and per break (kind 1).
CsvTable report_table(const MinimizerReport& report);
void emit_report(const MinimizerReport& report, const std::filesystem::path& path);

}  // namespace wfvar::cli
