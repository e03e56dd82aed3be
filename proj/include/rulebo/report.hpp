#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rulebo/config.hpp"
#include "rulebo/controller.hpp"

namespace rulebo {

struct Series {
  std::string label;
  std::string color;  // any SVG color
  std::vector<double> values;
};

/// Standalone SVG line chart; x is the 0-based index into each series.
std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series,
                          int width = 640, int height = 400);

struct RunArtifacts {
  std::filesystem::path dir;
  ExperimentConfig config;
  Checkpoint checkpoint;
};

/// Throws MissingArtifact when config.json or checkpoint.json is absent.
RunArtifacts load_run(const std::filesystem::path& dir);

/// Writes plots/cycle_<k>_accuracy.svg and plots/cycle_<k>_loss.svg for
/// every loop cycle k >= 1. Returns the written paths.
std::vector<std::filesystem::path> write_cycle_plots(const RunArtifacts& run);

struct ComparisonTable {
  std::vector<std::string> columns;            // one per run
  std::vector<int> cycles;                     // row keys
  std::vector<std::vector<double>> best;       // [row][column], NaN when absent
  std::vector<double> wall_clock_s;            // per run
};

/// Running best objective per cycle for each run. Columns are named after
/// the run mode, suffixed with the directory name on collisions.
ComparisonTable compare_runs(const std::vector<RunArtifacts>& runs);
std::string comparison_csv(const ComparisonTable& t);
std::string comparison_text(const ComparisonTable& t);

}  // namespace rulebo
