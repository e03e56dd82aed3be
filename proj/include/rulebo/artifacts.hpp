#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rulebo/config.hpp"
#include "rulebo/controller.hpp"

namespace rulebo {

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

/// One column per dimension: the checkpoint's current space order first,
/// then names that only appear in earlier records.
std::vector<std::string> assignment_columns(const Checkpoint& ckpt);

/// cycle, <dimensions>, objective, issues, actions, wall_clock_s
std::string cycles_csv(const Checkpoint& ckpt);
/// Deterministic per-cycle summary (no timing columns).
std::string summary_csv(const Checkpoint& ckpt);
/// cycle, epoch, train_loss, val_loss, train_acc, val_acc
std::string curves_csv(const Checkpoint& ckpt);

namespace run_files {
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kCheckpoint = "checkpoint.json";
inline constexpr const char* kCycles = "cycles.csv";
inline constexpr const char* kSummary = "summary.csv";
inline constexpr const char* kCurves = "curves.csv";
}  // namespace run_files

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Writes config.json into a fresh or reused run directory.
void write_config_snapshot(const std::filesystem::path& dir, const ExperimentConfig& config);
/// Writes checkpoint.json and the three CSV logs.
void write_run_artifacts(const std::filesystem::path& dir, const Checkpoint& ckpt);

}  // namespace rulebo
