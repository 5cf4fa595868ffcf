#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gflow/flow.hpp"

namespace gflow {

/// Invalid configuration or command line; maps to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OutputConfig {
  std::filesystem::path directory = "out";
  bool trajectories = false;
  bool diagnostics = true;
};

struct ExperimentConfig {
  MixtureSpec spec;
  std::vector<double> ws;
  ClassLabel target = ClassLabel::Positive;
  ScoreSourceConfig source;
  IntegratorConfig integrator;
  std::size_t n = 500;
  std::uint64_t seed = 0;
  OutputConfig outputs;
  /// git-style blob hash of the config text.
  std::string hash;
};

IntegratorConfig integrator_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const IntegratorConfig& cfg);
ScoreSourceConfig score_source_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ScoreSourceConfig& source);

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunOutcome {
  std::vector<std::filesystem::path> files;
  std::size_t failures = 0;
};

RunOutcome run_experiment(const ExperimentConfig& cfg, int workers = 0);

/// Runs a verification suite (gaussian | compact | corruption | all).
nlohmann::json run_verify_suite(const std::string& suite, std::uint64_t seed, int workers = 0);

/// Writes bands.csv and scatter.csv into `out_dir`. Projection is a coordinate
/// index ("0"), a direction ("1,0.5"), or the normalized difference of the
/// mean finals of two batch files ("meandiff:A.csv,B.csv").
std::vector<std::filesystem::path> export_plotdata(const std::vector<std::filesystem::path>& inputs,
                                                   const std::string& projection,
                                                   const std::filesystem::path& out_dir,
                                                   std::size_t grid_points = 200);

std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

int cli_main(int argc, char** argv);

}  // namespace gflow
