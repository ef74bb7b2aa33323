// Batch driver: runs one registered problem adaptively and writes the
// convergence table (and optionally VTK files) to an output directory.

#include "dwr/errors.hpp"
#include "dwr/output.hpp"
#include "dwr/problems.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int exit_tolerance = 0;
constexpr int exit_solver = 1;
constexpr int exit_max_dofs = 2;
constexpr int exit_max_levels = 3;
constexpr int exit_usage = 64;

struct RunConfig {
  std::string problem = "P1";
  std::string strategy = "dwr";
  double tol = 1e-3;
  std::size_t max_dofs = 200000;
  std::size_t max_levels = 40;
  std::string output_dir = ".";
  bool emit_vtk = false;
  bool record_wall_time = true;
};

RunConfig load_config(const std::string& path) {
  RunConfig c;
  if (path.empty())
    return c;
  std::ifstream in(path);
  if (!in)
    throw dwr::UsageError("cannot read config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw dwr::UsageError("config " + path + ": " + e.what());
  }
  if (!j.is_object())
    throw dwr::UsageError("config " + path + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "problem")
        c.problem = value.get<std::string>();
      else if (key == "strategy")
        c.strategy = value.get<std::string>();
      else if (key == "tol")
        c.tol = value.get<double>();
      else if (key == "max_dofs")
        c.max_dofs = value.get<std::size_t>();
      else if (key == "max_levels")
        c.max_levels = value.get<std::size_t>();
      else if (key == "output_dir")
        c.output_dir = value.get<std::string>();
      else if (key == "emit_vtk")
        c.emit_vtk = value.get<bool>();
      else if (key == "record_wall_time")
        c.record_wall_time = value.get<bool>();
      else
        throw dwr::UsageError("config " + path + ": unknown key '" + key + "'");
    } catch (const nlohmann::json::type_error&) {
      throw dwr::UsageError("config " + path + ": wrong type for '" + key + "'");
    }
  }
  return c;
}

const char* status_text(dwr::AdaptStatus s) {
  switch (s) {
  case dwr::AdaptStatus::tolerance_reached:
    return "tolerance reached";
  case dwr::AdaptStatus::max_dofs_reached:
    return "dof limit reached";
  case dwr::AdaptStatus::max_levels_reached:
    return "level limit reached";
  case dwr::AdaptStatus::solver_failure:
    return "solver failure";
  }
  return "";
}

int run(const RunConfig& cfg) {
  if (!(cfg.tol > 0.0))
    throw dwr::UsageError("tol must be positive");
  if (cfg.max_levels == 0)
    throw dwr::UsageError("max_levels must be at least 1");
  const dwr::ProblemDefinition& problem = dwr::find_problem(cfg.problem);
  const dwr::MarkingStrategy strategy = dwr::parse_strategy(cfg.strategy);

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  dwr::RunOptions options;
  options.max_levels = cfg.max_levels;
  if (cfg.emit_vtk)
    options.observer = [&dir](const dwr::LevelOutput& out) {
      dwr::write_vtk((dir / ("level_" + std::to_string(out.level) + ".vtk")).string(), *out.mesh,
                     out.fields, out.estimate);
    };

  const dwr::ConvergenceTable table = dwr::run_problem(problem, cfg.tol, strategy, cfg.max_dofs, options);

  std::ofstream csv(dir / "table.csv", std::ios::binary);
  if (!csv)
    throw dwr::UsageError("cannot write " + (dir / "table.csv").string());
  dwr::write_table_csv(csv, table, cfg.record_wall_time);

  std::cout << problem.name << " (" << strategy.name() << "): " << table.rows.size() << " levels, "
            << status_text(table.status);
  if (!table.rows.empty())
    std::cout << ", final eta " << table.rows.back().eta;
  std::cout << '\n';
  if (!table.message.empty())
    std::cerr << table.message << '\n';

  switch (table.status) {
  case dwr::AdaptStatus::tolerance_reached:
    return exit_tolerance;
  case dwr::AdaptStatus::max_dofs_reached:
    return exit_max_dofs;
  case dwr::AdaptStatus::max_levels_reached:
    return exit_max_levels;
  case dwr::AdaptStatus::solver_failure:
    return exit_solver;
  }
  return exit_solver;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented adaptive finite element runs"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "print the registered problems");
  auto* run_cmd = app.add_subcommand("run", "run one problem adaptively");

  std::string config_path;
  std::optional<std::string> problem, strategy, out;
  std::optional<double> tol;
  std::optional<std::size_t> max_dofs, max_levels;
  bool vtk = false, no_wall_time = false;
  run_cmd->add_option("--config", config_path, "JSON configuration file");
  run_cmd->add_option("--problem", problem, "problem name (see list)");
  run_cmd->add_option("--tol", tol, "stop when eta <= tol");
  run_cmd->add_option("--strategy", strategy, "dwr[:theta], fixed_fraction[:f], uniform, adhoc[:f]");
  run_cmd->add_option("--max-dofs", max_dofs, "stop after a level with more dofs");
  run_cmd->add_option("--max-levels", max_levels, "stop after this many levels");
  run_cmd->add_option("--out", out, "output directory");
  run_cmd->add_flag("--vtk", vtk, "write level_<k>.vtk for every level");
  run_cmd->add_flag("--no-wall-time", no_wall_time, "write 0 in the wall time column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_usage;
  }

  if (list->parsed()) {
    std::cout << dwr::registry_listing();
    return 0;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (problem)
      cfg.problem = *problem;
    if (strategy)
      cfg.strategy = *strategy;
    if (tol)
      cfg.tol = *tol;
    if (max_dofs)
      cfg.max_dofs = *max_dofs;
    if (max_levels)
      cfg.max_levels = *max_levels;
    if (out)
      cfg.output_dir = *out;
    if (vtk)
      cfg.emit_vtk = true;
    if (no_wall_time)
      cfg.record_wall_time = false;
    return run(cfg);
  } catch (const dwr::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const dwr::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_solver;
  }
}
