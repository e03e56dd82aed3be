#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rulebo/config.hpp"
#include "rulebo/diagnosis.hpp"
#include "rulebo/rules.hpp"
#include "rulebo/space.hpp"
#include "rulebo/trainee.hpp"

namespace rulebo {

struct Observation {
  std::vector<double> point;  // encoding in the space active when last migrated
  Assignment assignment;
  double objective = 0.0;     // minimization sense
  int cycle = 0;
  bool eligible = true;       // usable for GP fitting
  bool stale = false;         // padded with a midpoint for an added dimension
  bool failed = false;
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Everything one loop iteration produced.
struct CycleRecord {
  int cycle = 0;  // 0 = initial training
  /// "initial", "retrain", "bo", "bo_random" or "random".
  std::string branch;
  Assignment assignment;
  std::vector<std::string> directives;
  double objective = 0.0;
  double best_objective = 0.0;
  bool failed = false;
  std::string failure;
  DiagnosisReport issues;  // diagnosis that preceded this training
  std::vector<std::string> actions;
  std::vector<std::string> notes;
  History history;
  EvalResult result;
  double wall_clock_s = 0.0;
  friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

struct Checkpoint {
  static constexpr int kFormatVersion = 1;
  int format_version = kFormatVersion;
  SearchSpace space;
  ModelSpec model;
  std::vector<Observation> observations;
  std::string rng_state;
  int cycle = 0;  // loop iterations completed
  std::optional<double> best_y;
  Assignment best_assignment;
  std::vector<CycleRecord> records;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct Summary {
  Assignment best_assignment;
  double best_objective = 0.0;
  int trainings = 0;
  std::vector<CycleRecord> records;
};

json to_json(const Observation& o);
json to_json(const CycleRecord& r);
json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const json& j);

/// Writes atomically (temp file + rename).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws CheckpointCorrupt (with the byte offset for parse errors) or
/// UnsupportedVersion.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Objective in minimization sense for the configured kind.
double objective_of(const EvalResult& r, ObjectiveKind kind);

/// Re-expresses the observation log in `new_space`, which must extend
/// `old_space` by appended dimensions and/or shrink its domains.
Checkpoint migrate_checkpoint(const Checkpoint& ckpt, const SearchSpace& old_space,
                              const SearchSpace& new_space);

/// Fits the GP on the eligible observations, proposes by EI, trains and
/// records the result. Falls back to random sampling with fewer than two
/// eligible observations or on NumericalFailure.
Checkpoint bo_step(Checkpoint ckpt, const SearchSpace& space, Trainee& trainee,
                   const ExperimentConfig& config);

class Controller {
 public:
  Controller(ExperimentConfig config, Trainee& trainee);

  /// Samples the first assignment and trains it (cycle 0).
  Checkpoint start();
  /// One iteration: diagnose, tune, then retrain or take a BO step.
  void step(Checkpoint& ckpt);

  /// Runs until `ckpt.cycle == target_cycles` or `should_stop` returns true.
  void advance(Checkpoint& ckpt, int target_cycles);

  /// Called after every completed training with the updated checkpoint.
  std::function<void(const Checkpoint&)> on_checkpoint;
  /// Polled between cycles; returning true ends `advance` early.
  std::function<bool()> should_stop;

  const ExperimentConfig& config() const { return config_; }

 private:
  ExperimentConfig config_;
  Trainee& trainee_;
};

/// Full loop: the initial training plus `config.cycles` iterations.
Summary run(const ExperimentConfig& config, Trainee& trainee);

Summary summarize(const Checkpoint& ckpt);

}  // namespace rulebo
