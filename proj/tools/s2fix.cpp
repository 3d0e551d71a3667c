// Command-line front end: one subcommand per task, reading a scenario file
// and writing a JSON report and optionally an SVG figure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "s2fix/harness/run.hpp"
#include "s2fix/harness/scenario.hpp"
#include "s2fix/harness/svg.hpp"

namespace {

struct Flags {
  std::string scenario;
  std::string out;
  std::string svg;
  std::string projection = "stereographic_north";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> mesh_level;
  std::optional<int> max_steps;
  bool timing = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--scenario", f.scenario, "scenario file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "override the scenario seed");
  cmd->add_option("--out", f.out, "report path (default: stdout)");
  cmd->add_option("--svg", f.svg, "write a figure to this path");
  cmd->add_option("--projection", f.projection,
                  "stereographic_north, stereographic_south or orthographic:x,y,z");
  cmd->add_option("--tol", f.tol, "fixed-point tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--mesh-level", f.mesh_level, "icosphere level for sampled norms")->check(CLI::Range(0, 8));
  cmd->add_option("--max-steps", f.max_steps, "orbit and polyline step budget")->check(CLI::Range(2, 100000000));
  cmd->add_flag("--timing", f.timing, "record wall time in the report");
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

int run_task(const std::string& task, const Flags& f) {
  using namespace s2fix;
  using namespace s2fix::harness;
  Json report;
  std::optional<Projection> proj;
  try {
    if (!f.svg.empty()) proj = parse_projection(f.projection);
    Scenario s = load_scenario(f.scenario);
    if (s.task_kind != task) {
      // The subcommand decides the task; parameters only carry over for a match.
      s.task_kind = task;
      s.task_params = Json::object();
    }
    if (f.seed) s.seed = *f.seed;
    if (f.tol) s.config.tol = *f.tol;
    if (f.mesh_level) s.config.mesh_level = *f.mesh_level;
    if (f.max_steps) {
      s.config.N = *f.max_steps;
      s.config.max_segments = *f.max_steps;
    }
    report = run(s, RunOptions{f.timing});
  } catch (const Error& e) {
    std::cerr << "s2fix: " << e.what() << "\n";
    return exit_status(e.code());
  }

  const std::string text = report.dump(2) + "\n";
  if (f.out.empty()) {
    std::cout << text;
  } else if (!write_file(f.out, text)) {
    std::cerr << "s2fix: cannot write " << f.out << "\n";
    return 4;
  }
  if (proj && !write_file(f.svg, render_svg(report, *proj))) {
    std::cerr << "s2fix: cannot write " << f.svg << "\n";
    return 4;
  }
  const int status = report_exit_status(report);
  if (status != 0) std::cerr << "s2fix: " << report["error"].value("message", "") << "\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Common fixed points of nilpotent actions near the identity on the sphere"};
  app.set_version_flag("--version", std::string(s2fix::kLibraryVersion));
  app.require_subcommand(1);

  Flags flags;
  const char* tasks[][2] = {{"norm", "sampled C1 distance to the identity"},
                            {"check-vk", "membership in the neighborhood V_k"},
                            {"orbit", "forward orbit and recurrence scan"},
                            {"curve", "character curve and its loop partition"},
                            {"fix", "common fixed point of the action"},
                            {"fix2", "two fixed points separated by a character curve"},
                            {"verify-algebra", "exhaustive commutator identities in a finite group"},
                            {"verify-lemmas", "seeded checks of the curve and norm lemmas"}};
  for (const auto& t : tasks) add_flags(app.add_subcommand(t[0], t[1]), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }
  for (const auto& t : tasks) {
    if (app.got_subcommand(t[0])) return run_task(t[0], flags);
  }
  return 4;
}
