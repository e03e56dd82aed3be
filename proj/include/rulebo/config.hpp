#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "rulebo/acquisition.hpp"
#include "rulebo/dataset.hpp"
#include "rulebo/diagnosis.hpp"
#include "rulebo/json_io.hpp"
#include "rulebo/rules.hpp"
#include "rulebo/space.hpp"
#include "rulebo/surrogate.hpp"
#include "rulebo/trainee.hpp"

namespace rulebo {

enum class RunMode { tuner, plain_bo, random };
enum class ObjectiveKind { val_loss, neg_val_acc };

std::string_view mode_name(RunMode m);
RunMode parse_mode(std::string_view s);
std::string_view objective_name(ObjectiveKind k);
ObjectiveKind parse_objective(std::string_view s);

struct TraineeConfig {
  /// "synthetic", "mlp", or empty for an external command.
  std::string builtin;
  std::vector<std::string> command;
  double timeout_s = 3600.0;
  json synthetic = json::object();  // SyntheticConstants overrides
  json dataset = json::object();    // MLP data source
};

struct ExperimentConfig {
  SearchSpace space;
  ModelSpec model;
  TraineeConfig trainee;
  RunMode mode = RunMode::tuner;
  int cycles = 7;
  int epochs = 30;
  ObjectiveKind objective = ObjectiveKind::val_loss;
  DiagnosisThresholds thresholds;
  AcquisitionConfig acquisition;
  FitConfig gp;
  RuleTable rules = default_rule_table();
  std::uint64_t seed = 0;
  std::string output_dir = "run";
};

/// Throws ConfigError with a readable message on any schema violation.
ExperimentConfig config_from_json(const json& j);
json to_json(const ExperimentConfig& c);

/// Relative dataset paths are resolved against the config file's folder.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Builds the trainee the config names.
std::unique_ptr<Trainee> make_trainee(const ExperimentConfig& config);

/// Data source of the MLP trainee: {"kind":"blobs",...} or {"kind":"idx",...}.
Dataset load_dataset(const json& spec);

}  // namespace rulebo
