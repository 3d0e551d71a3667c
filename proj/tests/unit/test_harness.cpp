#include <gtest/gtest.h>

#include <filesystem>

#include "s2fix/harness/run.hpp"
#include "s2fix/harness/scenario.hpp"
#include "s2fix/harness/svg.hpp"

using namespace s2fix;
using namespace s2fix::harness;

namespace {

const std::string kRoot = S2FIX_SOURCE_DIR;

#define EXPECT_S2_ERROR(stmt, expected)          \
  do {                                           \
    try {                                        \
      stmt;                                      \
      ADD_FAILURE() << "no error from " #stmt;   \
    } catch (const Error& e) {                   \
      EXPECT_EQ(e.code(), expected) << e.what(); \
    }                                            \
  } while (0)

Json run_file(const std::string& name) { return run(load_scenario(kRoot + "/scenarios/" + name + ".json")); }

const char* kMinimal = R"({
  "schema_version": 1,
  "generators": {"r": {"type": "rotation", "axis": [0, 0, 1], "angle": 0.004}},
  "task": {"kind": "norm"}
})";

int count(const std::string& s, const std::string& needle) {
  int n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + needle.size())) ++n;
  return n;
}

// d attributes of paths drawn with the loop stroke colour.
std::vector<std::string> loop_paths(const std::string& svg) {
  std::vector<std::string> out;
  const std::string open = "<path d=\"";
  const std::string tail = "\" fill=\"none\" stroke=\"#1f4e8c\"";
  for (auto pos = svg.find(open); pos != std::string::npos; pos = svg.find(open, pos + 1)) {
    const auto start = pos + open.size();
    const auto end = svg.find('"', start);
    if (svg.compare(end, tail.size(), tail) == 0) out.push_back(svg.substr(start, end - start));
  }
  return out;
}

}  // namespace

TEST(Scenario, MinimalFile) {
  const auto s = parse_scenario_text(kMinimal);
  EXPECT_EQ(s.task_kind, "norm");
  EXPECT_EQ(s.k, 1);
  ASSERT_EQ(s.generators.size(), 1u);
  EXPECT_EQ(s.generators.name(0), "r");
  EXPECT_EQ(s.config.tol, SolverConfig{}.tol);
}

TEST(Scenario, DanglingWordReference) {
  const char* text = R"({
    "schema_version": 1,
    "generators": {
      "a": {"type": "rotation", "axis": [0, 0, 1], "angle": 0.004},
      "w": {"type": "word", "letters": [["a", 1], ["missing", -1]]}
    },
    "task": {"kind": "norm"}
  })";
  EXPECT_S2_ERROR(parse_scenario_text(text), ErrorCode::DanglingReference);
}

TEST(Scenario, UnsupportedSchemaVersion) {
  EXPECT_S2_ERROR(load_scenario(kRoot + "/tests/fixtures/bad_schema_version.json"), ErrorCode::SchemaError);
}

TEST(Scenario, MalformedInput) {
  EXPECT_S2_ERROR(parse_scenario_text("{\"schema_version\": 1,"), ErrorCode::ParseError);
  EXPECT_S2_ERROR(parse_scenario_text(R"({"schema_version": 1, "generators": {}, "task": {"kind": "dance"}})"),
                  ErrorCode::SchemaError);
  EXPECT_S2_ERROR(parse_scenario_text(R"({"schema_version": 1, "generators": {}, "task": {"kind": "norm"}, "x": 1})"),
                  ErrorCode::SchemaError);
  EXPECT_S2_ERROR(parse_scenario_text(R"({"schema_version": 1, "generators": {
      "a": {"type": "rotation", "axis": [0, 0], "angle": 0.1}}, "task": {"kind": "norm"}})"),
                  ErrorCode::SchemaError);
}

TEST(Scenario, CanonicalFormIsIdempotent) {
  for (const auto& entry : std::filesystem::directory_iterator(kRoot + "/scenarios")) {
    if (entry.path().extension() != ".json") continue;
    const auto s = load_scenario(entry.path().string());
    const Json once = canonical_json(s);
    const Json twice = canonical_json(parse_scenario(once));
    EXPECT_EQ(once.dump(), twice.dump()) << entry.path();
  }
}

TEST(Run, CheckVkRotation) {
  const auto rep = run_file("check_vk_rotation");
  ASSERT_EQ(rep["status"], "ok");
  EXPECT_EQ(rep["result"]["memberships"][0]["verdict"], "Inside");
  EXPECT_EQ(report_exit_status(rep), 0);
}

TEST(Run, FixSharedAxis) {
  const auto rep = run_file("shared_axis_fix");
  ASSERT_EQ(rep["status"], "ok");
  const auto& p = rep["result"]["nested"]["point"];
  EXPECT_NEAR(std::abs(p[2].get<double>()), 1.0, 1e-12);
}

TEST(Run, VerifyAlgebra) {
  const auto rep = run_file("algebra_ut33");
  ASSERT_EQ(rep["status"], "ok");
  const auto& r = rep["result"]["report"];
  EXPECT_TRUE(r["commutator_identities"].get<bool>());
  EXPECT_TRUE(r["last_level_generates"].get<bool>());
  EXPECT_TRUE(r["derived_generates"].get<bool>());
}

TEST(Run, ErrorsBecomeReports) {
  const auto rep = run_file("algebra_s3");
  EXPECT_EQ(rep["status"], "error");
  EXPECT_EQ(rep["error"]["code"], "NotNilpotent");
  EXPECT_EQ(report_exit_status(rep), 2);
}

TEST(Run, ReportLayoutAndDeterminism) {
  const auto s = parse_scenario_text(kMinimal);
  const Json a = run(s);
  const Json b = run(s);
  EXPECT_EQ(a.dump(), b.dump());
  std::vector<std::string> keys;
  for (auto it = a.begin(); it != a.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"schema_version", "library_version", "task", "seed", "scenario",
                                            "tolerances", "status", "result", "figure"}));
  EXPECT_FALSE(a.contains("wall_time_s"));
  EXPECT_TRUE(run(s, RunOptions{true}).contains("wall_time_s"));
}

TEST(Run, SeededCampaignsReplay) {
  auto s = load_scenario(kRoot + "/scenarios/lemma_ball_exclusion.json");
  const auto first = run(s).dump();
  EXPECT_EQ(run(s).dump(), first);
  s.seed += 1;
  EXPECT_NE(run(s).dump(), first);
}

TEST(Svg, HexagonCurve) {
  const auto svg = render_svg(run_file("hexagon_curve"), Projection::stereographic_north());
  const auto loops = loop_paths(svg);
  ASSERT_EQ(loops.size(), 1u);
  EXPECT_EQ(count(loops[0], "M"), 1);
  EXPECT_EQ(count(loops[0], "L"), 5);
  EXPECT_EQ(loops[0].back(), 'Z');
}

TEST(Svg, PolygonWithPoles) {
  const auto rep = run_file("polygon_fix2");
  ASSERT_EQ(rep["status"], "ok");
  const auto svg = render_svg(rep, Projection::stereographic_north());
  const auto loops = loop_paths(svg);
  ASSERT_FALSE(loops.empty());
  EXPECT_EQ(count(loops[0], "L"), 1999);
  // The equator projects to the unit circle: 560 px across a window of 5 units.
  EXPECT_EQ(loops[0].rfind("M412.000 300.000", 0), 0u) << loops[0].substr(0, 40);
  // North pole at the center; the south pole is at infinity and pinned hollow to the frame.
  EXPECT_NE(svg.find("<circle cx=\"300.000\" cy=\"300.000\" r=\"4\" fill=\"black\""), std::string::npos);
  EXPECT_EQ(count(svg, "r=\"4\" fill=\"none\""), 1);
}

TEST(Svg, EmptyReport) {
  const auto svg = render_svg(Json::object(), Projection::orthographic(Vec3::UnitX()));
  EXPECT_EQ(count(svg, "<rect"), 1);
  EXPECT_EQ(count(svg, "<path"), 0);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Svg, Projections) {
  EXPECT_EQ(parse_projection("stereographic_south").kind, Projection::Kind::StereographicSouth);
  const auto o = parse_projection("orthographic:0,1,0");
  EXPECT_EQ(o.kind, Projection::Kind::Orthographic);
  EXPECT_FALSE(o(Vec3(0, -1, 0)));
  EXPECT_S2_ERROR(parse_projection("mercator"), ErrorCode::InvalidArgument);
}
