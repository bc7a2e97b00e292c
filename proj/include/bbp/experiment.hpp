#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bbp/ensemble.hpp"

namespace bbp {

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::string checks;  // the statement the experiment tests
};

// Stable order.
const std::vector<ExperimentInfo>& list_experiments();

// Validated configuration. `raw` keeps the document as given (after defaults
// are NOT applied) so the hash identifies the user's input.
struct ExperimentConfig {
  std::string experiment;
  std::string description;
  std::optional<nlohmann::json> profile;
  std::string law = "gaussian";
  int beta = 1;
  nlohmann::json deformation;  // {positions, a_tilde} or null
  int trials = 100;
  std::uint64_t seed = 1;
  nlohmann::json tolerances = nlohmann::json::object();
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json raw;

  // Throws SchemaError on unknown keys, wrong types or missing fields.
  static ExperimentConfig parse(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path);

  bool needs_model() const;
  // Builds the model; throws SchemaError when the model fields are absent.
  Model model() const;
  std::string hash() const;
};

struct Check {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct CsvTable {
  std::string file;  // e.g. "values.csv"
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct RunReport {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_seconds = 0.0;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::vector<CsvTable> tables;
  std::vector<std::pair<std::string, nlohmann::json>> json_files;  // extra documents (file, content)

  bool pass() const;
  nlohmann::json to_json() const;
};

// Runs the experiment. seed_override replaces the config's master seed.
RunReport run_experiment(const ExperimentConfig& config, int threads,
                         std::optional<std::uint64_t> seed_override = std::nullopt);

// Writes report.json, every CSV table and every extra JSON document into dir (created if needed).
void write_outputs(const RunReport& report, const std::filesystem::path& dir);

std::string format_double(double x);  // %.17g

}  // namespace bbp
