#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bbp/errors.hpp"
#include "bbp/experiment.hpp"
#include "bbp/parallel.hpp"

namespace {

enum Exit { ok = 0, checks_failed = 1, schema = 2, numeric = 3 };

int run(const std::string& config_path, std::optional<int> threads, const std::string& out_dir,
        std::optional<std::uint64_t> seed) {
  bbp::RunReport report;
  try {
    const auto config = bbp::ExperimentConfig::load(config_path);
    report = bbp::run_experiment(config, threads.value_or(bbp::default_thread_count()), seed);
  } catch (const bbp::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << " (seed " << e.seed() << ")\n";
    return numeric;
  } catch (const bbp::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return schema;
  } catch (const bbp::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return schema;
  } catch (const bbp::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return schema;
  }

  bbp::write_outputs(report, out_dir);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& c : report.checks)
    std::printf("%s  %s: measured %.6g, expected %.6g, tolerance %.3g\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                c.measured, c.expected, c.tolerance);
  std::printf("%s  %s (seed %llu, %.2f s, outputs in %s)\n", report.pass() ? "PASS" : "FAIL", report.experiment.c_str(),
              static_cast<unsigned long long>(report.seed), report.wall_seconds, out_dir.c_str());
  return report.pass() ? ok : checks_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deformed random matrix laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "bbp_out";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a JSON config");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--threads", threads, "worker threads (default: BBP_LAB_THREADS or hardware)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--seed", seed, "override the config's master seed");

  auto* list_cmd = app.add_subcommand("list", "list experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : schema;
  }

  if (*list_cmd) {
    for (const auto& e : bbp::list_experiments())
      std::printf("%-18s %s\n%-18s   checks: %s\n", e.name.c_str(), e.description.c_str(), "", e.checks.c_str());
    return ok;
  }
  return run(config_path, threads, out_dir, seed);
}
