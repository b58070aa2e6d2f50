#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "fixtures.hpp"
#include "wfvar/error.hpp"
#include "wfvar/io.hpp"

using namespace wfvar;
using namespace wfvar::testing;

namespace {

std::filesystem::path scratch(const char* name) {
  const auto p = std::filesystem::temp_directory_path() / "wfvar_test_io" / name;
  std::filesystem::create_directories(p.parent_path());
  return p;
}

}  // namespace

TEST_CASE("trajectory JSON") {
  SUBCASE("segments round trip exactly") {
    Rng rng(9101);
    const auto tr = random_smooth(rng, {1, -2, 0.5}, -3, 4, 5, 0.6);
    const auto back = trajectory_from_json(trajectory_to_json(tr), kPositive);
    REQUIRE(back.segments().size() == tr.segments().size());
    for (std::size_t i = 0; i < tr.segments().size(); ++i) {
      CHECK(back.segments()[i].coeffs() == tr.segments()[i].coeffs());
      CHECK(back.segments()[i].t0() == tr.segments()[i].t0());
      CHECK(back.segments()[i].t1() == tr.segments()[i].t1());
    }
    CHECK(trajectory_to_json(back) == trajectory_to_json(tr));
  }
  SUBCASE("vertices") {
    const auto tr = trajectory_from_json(R"({"vertices": [[0, 0, 0, 0], [2, 1, 0, 0], [4, 1, 1, 0]]})", kNegative);
    CHECK(tr.segments().size() == 2);
    CHECK(tr.particle().charge == -1.0);
    CHECK(norm(tr.path().position(1.0) - Vec3{0.5, 0, 0}) < 1e-15);
  }
  SUBCASE("file reference") {
    const auto p = scratch("ref.json");
    write_text_file(p, R"({"vertices": [[0, 1, 2, 3], [1, 1, 2, 3]]})");
    const auto tr = trajectory_from_json(R"({"file": "ref.json"})", kPositive, p.parent_path());
    CHECK(norm(tr.path().position(0.5) - Vec3{1, 2, 3}) == 0.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(trajectory_from_json("{", kPositive), ConfigError);
    CHECK_THROWS_AS(trajectory_from_json(R"({"points": []})", kPositive), ConfigError);
    CHECK_THROWS_AS(trajectory_from_json(R"({"vertices": [[0, 0, 0]]})", kPositive), ConfigError);
    CHECK_THROWS_AS(trajectory_from_json(R"({"vertices": [[0, 0, 0, 0], [1, 2, 0, 0]]})", kPositive),
                    SuperluminalError);
    CHECK_THROWS_AS(trajectory_from_json(R"({"file": "missing.json"})", kPositive, scratch("x").parent_path()),
                    IoError);
  }
}

TEST_CASE("family JSON") {
  const std::string text = R"({"t_final": 10, "intervals": [
      {"t_edge": 0, "D_coeffs": [[0], [3.5449077018110318], [0]], "L_coeffs": [[0.1, 0, 0, 0], [0], [0]]},
      {"t_edge": 5}]})";
  const auto fam = family_from_json(text);
  CHECK(fam.intervals().size() == 2);
  CHECK(fam.continuous());
  const Vec3 n{1, 0, 0};
  CHECK(norm(fam.piece(1.0, n).D - Vec3{0, 1, 0}) < 1e-15);
  const auto again = family_from_json(family_to_json(fam));
  CHECK(family_to_json(again) == family_to_json(fam));
  CHECK_THROWS_AS(family_from_json(R"({"intervals": []})"), ConfigError);
  CHECK_THROWS_AS(family_from_json(R"({"t_final": 1, "intervals": [{"t_edge": 0, "D_coeffs": [[1, 2], [], []]}]})"),
                  ConfigError);
}

TEST_CASE("CSV tables") {
  SUBCASE("header only") { CHECK(CsvTable({"t", "value"}).str() == "t,value\n"); }
  SUBCASE("three rows") {
    CsvTable t({"a", "b"});
    for (int i = 0; i < 3; ++i) {
      const double row[] = {static_cast<double>(i), 0.1 * i};
      t.add_row(row);
    }
    const std::string s = t.str();
    CHECK(std::count(s.begin(), s.end(), '\n') == 4);
    CHECK(s.find("2,0.20000000000000001\n") != std::string::npos);
  }
  SUBCASE("width mismatch") {
    CsvTable t({"a", "b"});
    const double row[] = {1.0};
    CHECK_THROWS_AS(t.add_row(row), DomainError);
  }
}

TEST_CASE("property: formatted doubles round trip") {
  Rng rng(9102);
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.uniform(-1, 1) * std::pow(10.0, rng.integer(-300, 300));
    CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
  }
}
