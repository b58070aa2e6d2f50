#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "wfvar/cli.hpp"
#include "wfvar/io.hpp"

using namespace wfvar;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = WFVAR_SCENARIO_DIR;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "wfvar_test_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::main_entry(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const fs::path& p) {
  const std::string s = read_text_file(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("cli commands") {
  const fs::path dir = scratch("commands");
  SUBCASE("gah-scan on a polygonal pair") {
    const auto r = invoke({"gah-scan", "--scenario", (kScenarios / "polygonal_pair.json").string(), "--out",
                           dir.string(), "--quiet"});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    CHECK(line_count(dir / "gah.csv") == 1 + 32 * 200);
  }
  SUBCASE("unknown command") {
    const auto r = invoke({"frobnicate", "--scenario", (kScenarios / "static_pair.json").string()});
    CHECK(r.code == 2);
  }
  SUBCASE("bad flags") {
    CHECK(invoke({"action"}).code == 2);
    CHECK(invoke({"action", "--scenario", "x.json", "--bogus"}).code == 2);
  }
  SUBCASE("action of the static pair") {
    const auto r = invoke({"action", "--scenario", (kScenarios / "static_pair.json").string(), "--out", dir.string()});
    CHECK(r.code == 0);
    const std::string csv = read_text_file(dir / "action.csv");
    CHECK(csv.rfind("particle,t_start,t_end,action\n", 0) == 0);
    CHECK(line_count(dir / "action.csv") == 3);
  }
  SUBCASE("every command on its sample scenario") {
    const std::pair<const char*, const char*> runs[] = {
        {"verify", "static_pair.json"},      {"minimize", "static_pair.json"},
        {"flux", "polygonal_pair.json"},     {"sewing-chain", "polygonal_pair.json"},
        {"build-polygonal", "polygonal_pair.json"}, {"construct-partner", "partner.json"},
        {"minimize", "free_pair.json"}};
    for (const auto& [cmd, file] : runs) {
      const auto r = invoke({cmd, "--scenario", (kScenarios / file).string(), "--out", dir.string(), "--quiet"});
      INFO(cmd, " ", r.err);
      CHECK(r.code == 0);
    }
    CHECK(fs::exists(dir / "partner.json"));
    CHECK(line_count(dir / "chain.csv") == 1 + 1 + 6);
  }
}

TEST_CASE("cli errors") {
  const fs::path dir = scratch("errors");
  SUBCASE("missing history") {
    write_text_file(dir / "s.json", R"({"version": 1,
      "trajectories": [{"vertices": [[-2, 0, 0, 0], [2, 0, 0, 0]]}, {"vertices": [[-2, 2, 0, 0], [2, 2, 0, 0]]}],
      "boundary": {"window1": [-2, 2], "window2": [-2, 2]}})");
    const auto r = invoke({"action", "--scenario", (dir / "s.json").string(), "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("insufficient history") != std::string::npos);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
  SUBCASE("unreadable and malformed scenarios") {
    CHECK(invoke({"action", "--scenario", (dir / "none.json").string()}).code == 1);
    write_text_file(dir / "bad.json", "{ not json");
    CHECK(invoke({"action", "--scenario", (dir / "bad.json").string()}).code == 1);
    write_text_file(dir / "v2.json", R"({"version": 2})");
    const auto r = invoke({"action", "--scenario", (dir / "v2.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("version") != std::string::npos);
  }
  SUBCASE("inconsistent family") {
    write_text_file(dir / "f.json", R"({"version": 1,
      "trajectories": [null, {"vertices": [[-50, 0, 0, 0], [50, 0, 0, 0]]}],
      "family": {"t_final": 40, "intervals": [{"t_edge": -40, "D_coeffs": [[0], [3.5], [0]], "L_coeffs": [[0.01], [0], [0.02]]}]},
      "partner": {"t1": [-5, 0, 5]}})");
    const auto r = invoke({"construct-partner", "--scenario", (dir / "f.json").string(), "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("inconsistent") != std::string::npos);
    CHECK(line_count(dir / "consistency.csv") == 4);
  }
  SUBCASE("missing trajectory") {
    write_text_file(dir / "m.json", R"({"version": 1})");
    const auto r = invoke({"verify", "--scenario", (dir / "m.json").string()});
    CHECK(r.code == 1);
  }
}

TEST_CASE("cli output is deterministic") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const char* cmd : {"gah-scan", "flux", "sewing-chain"}) {
    for (const auto& dir : {a, b}) {
      CHECK(invoke({cmd, "--scenario", (kScenarios / "polygonal_pair.json").string(), "--out", dir.string(), "--quiet"})
                .code == 0);
    }
  }
  CHECK(invoke({"minimize", "--scenario", (kScenarios / "static_pair.json").string(), "--out", a.string(), "--quiet"})
            .code == 0);
  CHECK(invoke({"minimize", "--scenario", (kScenarios / "static_pair.json").string(), "--out", b.string(), "--quiet"})
            .code == 0);
  for (const char* f : {"gah.csv", "flux.csv", "chain.csv", "report.csv", "summary.csv", "traj1.json"}) {
    INFO(f);
    CHECK(read_text_file(a / f) == read_text_file(b / f));
  }
}

TEST_CASE("report CSV") {
  MinimizerReport r;
  CHECK(cli::report_table(r).str() == "kind,particle,t0,t1,el,dpx,dpy,dpz,de\n");
  r.segments.push_back({1, 0.0, 1.0, 0.25});
  r.breaks.push_back({0.5, {1, 2, 3}, 4.0, 2});
  const std::string s = cli::report_table(r).str();
  CHECK(s.find("0,1,0,1,0.25,0,0,0,0\n") != std::string::npos);
  CHECK(s.find("1,2,0.5,0.5,0,1,2,3,4\n") != std::string::npos);
}
