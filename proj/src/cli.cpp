#include "wfvar/cli.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "json_io.hpp"
#include "wfvar/action.hpp"
#include "wfvar/error.hpp"
#include "wfvar/lightcone.hpp"

namespace wfvar::cli {

namespace {

using detail::get_or;
using detail::Json;

std::vector<double> time_list(const Json& j, const char* key, std::vector<double> fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const Json& v = j.at(key);
  // {"start", "end", "count"} or an explicit list.
  if (v.is_object()) {
    const double a = v.at("start").get<double>(), b = v.at("end").get<double>();
    const int n = v.at("count").get<int>();
    if (n < 1) throw ConfigError(std::string(key) + ".count must be positive");
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return out;
  }
  return v.get<std::vector<double>>();
}

TimeWindow window_from(const Json& j) {
  const auto w = j.get<std::vector<double>>();
  if (w.size() != 2) throw ConfigError("window must be [start, end]");
  return {w[0], w[1]};
}

void parse_settings(const Json& j, Scenario& s) {
  if (const Json g = j.value("gah_scan", Json::object()); !g.empty()) {
    s.gah_scan.t_start = get_or(g, "t_start", s.gah_scan.t_start);
    s.gah_scan.t_end = get_or(g, "t_end", s.gah_scan.t_end);
    s.gah_scan.t_count = get_or(g, "t_count", s.gah_scan.t_count);
    s.gah_scan.directions = get_or(g, "directions", s.gah_scan.directions);
    s.gah_scan.R = get_or(g, "R", s.gah_scan.R);
    s.gah_scan.tol = get_or(g, "tol", s.gah_scan.tol);
    if (s.gah_scan.t_count < 1 || s.gah_scan.directions < 1) throw ConfigError("gah_scan counts must be positive");
  }
  if (const Json f = j.value("flux", Json::object()); !f.empty()) {
    s.flux.times = time_list(f, "times", s.flux.times);
    s.flux.R = get_or(f, "R", s.flux.R);
    s.flux.n_theta = get_or(f, "n_theta", s.flux.n_theta);
    s.flux.n_phi = get_or(f, "n_phi", s.flux.n_phi);
    const auto mode = get_or<std::string>(f, "mode", "time_symmetric");
    if (mode == "time_symmetric") {
      s.flux.mode = FieldMode::TimeSymmetric;
    } else if (mode == "retarded") {
      s.flux.mode = FieldMode::RetardedOnly;
    } else {
      throw ConfigError("flux.mode must be 'time_symmetric' or 'retarded'");
    }
  }
  if (const Json p = j.value("partner", Json::object()); !p.empty()) {
    s.partner.n_theta = get_or(p, "n_theta", s.partner.n_theta);
    s.partner.n_phi = get_or(p, "n_phi", s.partner.n_phi);
    s.partner.t1 = time_list(p, "t1", {});
    s.partner.options.tolerance = get_or(p, "tolerance", s.partner.options.tolerance);
    s.partner.options.max_iter = get_or(p, "max_iter", s.partner.options.max_iter);
    const auto fit = get_or<std::string>(p, "fit", "auto");
    if (fit == "auto") {
      s.partner.options.fit = PartnerFit::Auto;
    } else if (fit == "polygonal") {
      s.partner.options.fit = PartnerFit::Polygonal;
    } else if (fit == "cubic") {
      s.partner.options.fit = PartnerFit::Cubic;
    } else {
      throw ConfigError("partner.fit must be 'auto', 'polygonal' or 'cubic'");
    }
  }
  if (const Json c = j.value("sewing_chain", Json::object()); !c.empty()) {
    if (c.contains("seed")) {
      s.sewing.seed = {c.at("seed").at("particle").get<int>(), c.at("seed").at("t").get<double>()};
    }
    const auto dir = get_or<std::string>(c, "direction", "forward");
    if (dir != "forward" && dir != "backward") throw ConfigError("sewing_chain.direction must be 'forward' or 'backward'");
    s.sewing.direction = dir == "forward" ? ChainDirection::Forward : ChainDirection::Backward;
    s.sewing.count = get_or(c, "count", s.sewing.count);
    if (s.sewing.count < 0) throw ConfigError("sewing_chain.count must be non-negative");
  }
  if (const Json m = j.value("minimize", Json::object()); !m.empty()) {
    auto& o = s.minimize.options;
    o.gtol = get_or(m, "gtol", o.gtol);
    o.max_iter = get_or(m, "max_iter", o.max_iter);
    o.block_iter = get_or(m, "block_iter", o.block_iter);
    o.el_tol = get_or(m, "el_tol", o.el_tol);
    o.break_tol = get_or(m, "break_tol", o.break_tol);
    s.minimize.nodes_per_segment = get_or(m, "nodes_per_segment", s.minimize.nodes_per_segment);
    s.minimize.breaks1 = get_or(m, "breaks1", s.minimize.breaks1);
    s.minimize.breaks2 = get_or(m, "breaks2", s.minimize.breaks2);
    s.minimize.free_break_times = get_or(m, "free_break_times", false);
  }
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("cannot parse scenario " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  Scenario s;
  s.base_dir = path.parent_path();
  try {
    s.version = get_or(j, "version", 0);
    if (s.version != 1) throw ConfigError("unsupported scenario version " + std::to_string(s.version));
    if (j.contains("particles")) {
      const auto& ps = j.at("particles");
      if (!ps.is_array() || ps.size() != 2) throw ConfigError("'particles' must list two particles");
      for (std::size_t k = 0; k < 2; ++k) {
        s.particles[k] = {get_or(ps[k], "mass", 1.0), get_or(ps[k], "charge", k == 0 ? 1.0 : -1.0)};
        if (!(s.particles[k].mass > 0.0)) throw ConfigError("particle mass must be positive");
      }
    }
    if (j.contains("trajectories")) {
      const auto& ts = j.at("trajectories");
      if (!ts.is_array() || ts.size() != 2) throw ConfigError("'trajectories' must have two entries");
      for (std::size_t k = 0; k < 2; ++k) {
        if (!ts[k].is_null()) s.trajectories[k] = detail::trajectory_from(ts[k], s.particles[k], s.base_dir);
      }
    }
    if (j.contains("boundary")) {
      const auto& b = j.at("boundary");
      BoundaryData bd;
      if (b.contains("window1")) bd.window1 = window_from(b.at("window1"));
      if (b.contains("window2")) bd.window2 = window_from(b.at("window2"));
      if (b.contains("history1")) bd.history1 = detail::trajectory_from(b.at("history1"), s.particles[0], s.base_dir);
      if (b.contains("history2")) bd.history2 = detail::trajectory_from(b.at("history2"), s.particles[1], s.base_dir);
      bd.k1 = get_or(b, "k1", 0.0);
      bd.k2 = get_or(b, "k2", 0.0);
      s.boundary = std::move(bd);
    }
    if (j.contains("family")) {
      const Json f = detail::resolve(j.at("family"), s.base_dir);
      if (f.contains("reference")) {
        s.family_reference = detail::trajectory_from(f.at("reference"), s.particles[0], s.base_dir);
      } else {
        s.family = detail::family_from(f, s.base_dir);
      }
    }
    s.output_dir = s.base_dir / get_or<std::string>(j, "output", ".");
    s.seed = get_or<std::uint64_t>(j, "seed", 1);
    parse_settings(j, s);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  return s;
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"action",          "verify",            "gah-scan",     "flux",
                                              "build-polygonal", "construct-partner", "sewing-chain", "minimize"};
  return names;
}

CsvTable report_table(const MinimizerReport& report) {
  CsvTable t({"kind", "particle", "t0", "t1", "el", "dpx", "dpy", "dpz", "de"});
  for (const auto& s : report.segments) {
    const double row[] = {0, static_cast<double>(s.particle), s.t0, s.t1, s.max_el, 0, 0, 0, 0};
    t.add_row(row);
  }
  for (const auto& b : report.breaks) {
    const double row[] = {1, static_cast<double>(b.particle), b.t, b.t, 0, b.dp.x, b.dp.y, b.dp.z, b.de};
    t.add_row(row);
  }
  return t;
}

void emit_report(const MinimizerReport& report, const std::filesystem::path& path) {
  write_text_file(path, report_table(report).str());
}

namespace {

struct Context {
  const Scenario& s;
  std::filesystem::path out_dir;
  std::optional<double> tol;
  std::ostream& out;
  bool quiet;

  void say(const std::string& line) const {
    if (!quiet) out << line << '\n';
  }
  const PiecewiseTrajectory& traj(std::size_t k) const {
    if (!s.trajectories[k]) throw ConfigError("scenario lacks trajectory " + std::to_string(k + 1));
    return *s.trajectories[k];
  }
  BoundaryData boundary() const {
    if (s.boundary) return *s.boundary;
    BoundaryData b;
    b.window1 = {traj(0).t_start(), traj(0).t_end()};
    b.window2 = {0.0, 0.0};
    return b;
  }
  void write_csv(const std::string& name, const CsvTable& t) const {
    write_text_file(out_dir / name, t.str());
    say("wrote " + (out_dir / name).string() + " (" + std::to_string(t.rows()) + " rows)");
  }
  void write_json(const std::string& name, const std::string& text) const {
    write_text_file(out_dir / name, text + "\n");
    say("wrote " + (out_dir / name).string());
  }
};

std::string fmt(double x) { return format_double(x); }

int cmd_action(const Context& c) {
  const BoundaryData b = c.boundary();
  CsvTable t({"particle", "t_start", "t_end", "action"});
  const double a1 = action(c.traj(0), c.traj(1), b.window1, b);
  const double r1[] = {1, b.window1.start, b.window1.end, a1};
  t.add_row(r1);
  c.say("action 1 = " + fmt(a1));
  if (b.window2.end > b.window2.start) {
    const double a2 = action_second(c.traj(0), c.traj(1), b);
    const double r2[] = {2, b.window2.start, b.window2.end, a2};
    t.add_row(r2);
    c.say("action 2 = " + fmt(a2));
  }
  c.write_csv("action.csv", t);
  return kExitOk;
}

int cmd_verify(const Context& c) {
  const MinimizerReport r = verify(c.traj(0), c.traj(1), c.boundary());
  c.write_csv("verify.csv", report_table(r));
  c.say("max EL residual " + fmt(r.max_el_residual) + ", max break residual " + fmt(r.max_break_residual));
  return kExitOk;
}

int cmd_gah_scan(const Context& c) {
  const auto& g = c.s.gah_scan;
  std::mt19937_64 rng(c.s.seed);
  std::normal_distribution<double> normal;
  std::vector<Vec3> dirs;
  for (int i = 0; i < g.directions; ++i) dirs.push_back(normalized(Vec3{normal(rng), normal(rng), normal(rng)}));
  CsvTable t({"t", "nx", "ny", "nz", "rx", "ry", "rz", "norm", "defined"});
  const double tol = c.tol.value_or(g.tol) * std::max(std::abs(c.traj(0).particle().charge),
                                                       std::abs(c.traj(1).particle().charge));
  double worst = 0.0;
  int above = 0;
  for (int i = 0; i < g.t_count; ++i) {
    const double tt = g.t_count == 1 ? g.t_start : g.t_start + (g.t_end - g.t_start) * i / (g.t_count - 1);
    for (const Vec3& n : dirs) {
      const auto r = gah_residual(c.traj(0), c.traj(1), tt, n, g.R);
      const Vec3 v = r.value_or(Vec3{});
      const double row[] = {tt, n.x, n.y, n.z, v.x, v.y, v.z, r ? norm(v) : 0.0, r ? 1.0 : 0.0};
      t.add_row(row);
      if (r) {
        worst = std::max(worst, norm(v));
        above += norm(v) > tol;
      }
    }
  }
  c.write_csv("gah.csv", t);
  c.say("max GAH residual " + fmt(worst) + ", " + std::to_string(above) + " samples above " + fmt(tol));
  return kExitOk;
}

int cmd_flux(const Context& c) {
  const auto& f = c.s.flux;
  const SphereMesh mesh = sphere_mesh(f.n_theta, f.n_phi);
  CsvTable t({"t", "R", "flux"});
  for (double tt : f.times) {
    const double v = sphere_flux(c.traj(0), c.traj(1), tt, f.R, mesh, f.mode);
    const double row[] = {tt, f.R, v};
    t.add_row(row);
  }
  c.write_csv("flux.csv", t);
  return kExitOk;
}

int cmd_build_polygonal(const Context& c) {
  int written = 0;
  for (std::size_t k = 0; k < 2; ++k) {
    if (!c.s.trajectories[k]) continue;
    const auto& tr = *c.s.trajectories[k];
    for (const auto& seg : tr.segments()) {
      if (seg.degree() > 1) throw ConfigError("trajectory " + std::to_string(k + 1) + " is not polygonal");
    }
    const ValidationReport v = validate(tr);
    c.write_json("traj" + std::to_string(k + 1) + ".json", trajectory_to_json(tr));
    c.say("trajectory " + std::to_string(k + 1) + ": " + std::to_string(tr.segments().size()) +
          " segments, max speed " + fmt(v.max_speed));
    ++written;
  }
  if (written == 0) throw ConfigError("scenario has no trajectories");
  return kExitOk;
}

CsvTable consistency_table(const ConsistencyReport& r) {
  CsvTable t({"t1", "spread", "x", "y", "z"});
  for (std::size_t i = 0; i < r.t1.size(); ++i) {
    const double row[] = {r.t1[i], r.spread[i], r.mean[i].x, r.mean[i].y, r.mean[i].z};
    t.add_row(row);
  }
  return t;
}

int cmd_construct_partner(const Context& c) {
  const auto& p = c.s.partner;
  const PiecewiseTrajectory& traj2 = c.traj(1);
  std::optional<PolygonalPairFamily> derived;
  const SeparationFamily* family = nullptr;
  if (c.s.family) {
    family = &*c.s.family;
  } else if (c.s.family_reference) {
    derived.emplace(*c.s.family_reference, traj2);
    family = &*derived;
  } else {
    throw ConfigError("construct-partner needs a 'family'");
  }
  if (p.t1.size() < 2) throw ConfigError("partner.t1 needs at least two times");
  PartnerOptions opts = p.options;
  if (c.tol) opts.tolerance = *c.tol;
  const SphereMesh mesh = sphere_mesh(p.n_theta, p.n_phi);
  try {
    const PartnerResult res = construct_partner(traj2, *family, mesh.directions, p.t1, c.s.particles[0], opts);
    c.write_csv("consistency.csv", consistency_table(res.report));
    c.write_json("partner.json", trajectory_to_json(res.traj1));
    c.say("max spread " + fmt(res.report.max_spread));
  } catch (const InconsistentParamsError& e) {
    c.write_csv("consistency.csv", consistency_table(e.report()));
    throw;
  }
  return kExitOk;
}

int cmd_sewing_chain(const Context& c) {
  const auto& sw = c.s.sewing;
  const SewingChain chain = sewing_chain(c.traj(0), c.traj(1), sw.seed, sw.direction, sw.count);
  CsvTable t({"step", "particle", "t"});
  const double seed_row[] = {0, static_cast<double>(sw.seed.particle), sw.seed.t};
  t.add_row(seed_row);
  for (std::size_t i = 0; i < chain.links.size(); ++i) {
    const double row[] = {static_cast<double>(i + 1), static_cast<double>(chain.links[i].particle), chain.links[i].t};
    t.add_row(row);
  }
  c.write_csv("chain.csv", t);
  c.say(std::to_string(chain.links.size()) + " links" + (chain.truncated ? " (truncated)" : ""));
  return kExitOk;
}

int cmd_minimize(const Context& c) {
  const auto& m = c.s.minimize;
  if (!c.s.boundary) throw ConfigError("minimize needs a 'boundary' block");
  const BoundaryData& b = *c.s.boundary;
  DecisionVector x = discretize(b, c.traj(0), c.traj(1), m.nodes_per_segment, m.breaks1, m.breaks2);
  x.free_break_times = m.free_break_times;
  MinimizeOptions opts = m.options;
  if (c.tol) opts.gtol = *c.tol;
  const MinimizeResult res = minimize(b, x, opts);
  c.write_json("traj1.json", trajectory_to_json(res.traj1));
  c.write_json("traj2.json", trajectory_to_json(res.traj2));
  c.write_csv("report.csv", report_table(res.report));
  CsvTable summary({"action", "iterations", "gradient_norm", "max_el", "max_break", "converged"});
  const double row[] = {res.report.action,          static_cast<double>(res.report.iterations),
                        res.report.gradient_norm,   res.report.max_el_residual,
                        res.report.max_break_residual, res.report.converged ? 1.0 : 0.0};
  summary.add_row(row);
  c.write_csv("summary.csv", summary);
  c.say(res.report.message + ": action " + fmt(res.report.action) + " after " +
        std::to_string(res.report.iterations) + " steps");
  return kExitOk;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(const std::string& command, const std::filesystem::path& scenario, const RunOptions& opts,
        std::ostream& out, std::ostream& err) {
  const auto& names = commands();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    err << "error: unknown command '" << command << "'\n";
    return kExitUsage;
  }
  try {
    const Scenario s = load_scenario(scenario);
    const Context c{s, opts.out_dir.value_or(s.output_dir), opts.tol, out, opts.quiet};
    if (command == "action") return cmd_action(c);
    if (command == "verify") return cmd_verify(c);
    if (command == "gah-scan") return cmd_gah_scan(c);
    if (command == "flux") return cmd_flux(c);
    if (command == "build-polygonal") return cmd_build_polygonal(c);
    if (command == "construct-partner") return cmd_construct_partner(c);
    if (command == "sewing-chain") return cmd_sewing_chain(c);
    return cmd_minimize(c);
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitError;
  }
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-body action-at-a-distance variational toolkit (natural units, c = 1)", "wfvar"};
  std::string command;
  std::string scenario;
  std::string out_dir;
  double tol = 0.0;
  bool quiet = false;
  std::string names;
  for (const auto& n : commands()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("command", command, "One of: " + names)->required();
  app.add_option("--scenario", scenario, "Scenario JSON file")->required();
  auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides the scenario)");
  auto* tol_opt = app.add_option("--tol", tol, "Tolerance override for the command");
  app.add_flag("--quiet", quiet, "Suppress the summary on stdout");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  }
  RunOptions opts;
  if (*out_opt) opts.out_dir = out_dir;
  if (*tol_opt) opts.tol = tol;
  opts.quiet = quiet;
  return run(command, scenario, opts, out, err);
}

}  // namespace wfvar::cli
