// Command-line front end: run, resume and report experiments.

#include <csignal>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "rulebo/artifacts.hpp"
#include "rulebo/config.hpp"
#include "rulebo/controller.hpp"
#include "rulebo/errors.hpp"
#include "rulebo/log.hpp"
#include "rulebo/report.hpp"

namespace fs = std::filesystem;
using namespace rulebo;

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

constexpr int kExitConfig = 2;
constexpr int kExitCheckpoint = 3;
constexpr int kExitArtifacts = 4;
constexpr int kExitInterrupted = 130;

void install_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

void print_summary(const Checkpoint& ckpt, const fs::path& dir) {
  const Summary s = summarize(ckpt);
  std::cout << "trainings: " << s.trainings << "\n"
            << "best objective: " << format_value(Value(s.best_objective)) << "\n"
            << "best assignment:";
  for (const auto& [k, v] : s.best_assignment) std::cout << ' ' << k << '=' << format_value(v);
  std::cout << "\noutputs: " << dir.string() << "\n";
}

// Drives the loop to `target` cycles, persisting after every completed
// training. A cycle interrupted by a signal is discarded so the checkpoint
// on disk always sits on a cycle boundary.
int drive(Controller& controller, Checkpoint& ckpt, int target, const fs::path& dir) {
  controller.on_checkpoint = [&](const Checkpoint& c) {
    if (!g_interrupted) write_run_artifacts(dir, c);
  };
  controller.should_stop = [] { return g_interrupted != 0; };
  controller.advance(ckpt, target);
  if (g_interrupted) {
    std::cerr << "interrupted; checkpoint saved in " << (dir / run_files::kCheckpoint).string() << "\n";
    return kExitInterrupted;
  }
  print_summary(ckpt, dir);
  return 0;
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& mode,
            std::optional<int> cycles, std::optional<int> epochs, std::optional<std::uint64_t> seed,
            const std::optional<std::string>& out) {
  ExperimentConfig cfg = load_config(config_path);
  if (mode) cfg.mode = parse_mode(*mode);
  if (cycles) cfg.cycles = *cycles;
  if (epochs) cfg.epochs = *epochs;
  if (seed) cfg.seed = *seed;
  if (out) cfg.output_dir = *out;
  // Re-validate the effective configuration before any training happens.
  cfg = config_from_json(to_json(cfg));
  auto trainee = make_trainee(cfg);
  Controller controller(cfg, *trainee);

  const fs::path dir = cfg.output_dir;
  write_config_snapshot(dir, cfg);
  install_handlers();
  Checkpoint ckpt = controller.start();
  if (g_interrupted) return kExitInterrupted;
  write_run_artifacts(dir, ckpt);
  const int rc = drive(controller, ckpt, cfg.cycles, dir);
  if (rc == 0) write_cycle_plots(load_run(dir));
  return rc;
}

int cmd_resume(const std::string& checkpoint_path, int remaining) {
  const fs::path ckpt_path = checkpoint_path;
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  const fs::path dir = ckpt_path.parent_path().empty() ? fs::path(".") : ckpt_path.parent_path();
  if (!fs::exists(dir / run_files::kConfig))
    throw MissingArtifact("no " + std::string(run_files::kConfig) + " next to " + ckpt_path.string());
  ExperimentConfig cfg = load_config(dir / run_files::kConfig);
  if (remaining < 0) throw ConfigError("--cycles must be >= 0");
  auto trainee = make_trainee(cfg);
  Controller controller(cfg, *trainee);
  install_handlers();
  const int rc = drive(controller, ckpt, ckpt.cycle + remaining, dir);
  if (rc == 0) {
    write_run_artifacts(dir, ckpt);
    write_cycle_plots(load_run(dir));
  }
  return rc;
}

int cmd_report(const std::vector<std::string>& dirs, const std::optional<std::string>& out) {
  std::vector<RunArtifacts> runs;
  for (const auto& d : dirs) runs.push_back(load_run(d));
  std::size_t plots = 0;
  for (const auto& r : runs) {
    // Regenerate the logs from the checkpoint so reports are idempotent.
    write_text(r.dir / run_files::kCycles, cycles_csv(r.checkpoint));
    write_text(r.dir / run_files::kSummary, summary_csv(r.checkpoint));
    write_text(r.dir / run_files::kCurves, curves_csv(r.checkpoint));
    plots += write_cycle_plots(r).size();
  }
  const auto table = compare_runs(runs);
  const fs::path target = out ? fs::path(*out) : runs.front().dir;
  fs::create_directories(target);
  write_text(target / "comparison.csv", comparison_csv(table));
  const std::string text = comparison_text(table);
  write_text(target / "comparison.txt", text);
  std::cout << text << "plots written: " << plots << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization with curve diagnosis and rule-based search-space tuning"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  std::string config_path;
  std::optional<std::string> mode, out;
  std::optional<int> cycles, epochs;
  std::optional<std::uint64_t> seed;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--mode", mode, "tuner | plain_bo | random");
  run->add_option("--cycles", cycles, "Loop iterations after the initial training");
  run->add_option("--epochs", epochs, "Epochs per training");
  run->add_option("--seed", seed, "Random seed");
  run->add_option("--out", out, "Output directory");

  auto* resume = app.add_subcommand("resume", "Continue an experiment from its checkpoint");
  std::string checkpoint_path;
  int remaining = 0;
  resume->add_option("--checkpoint", checkpoint_path, "checkpoint.json of a run")->required();
  resume->add_option("--cycles", remaining, "Additional loop iterations")->required();

  auto* report = app.add_subcommand("report", "Plot curves and compare runs");
  std::vector<std::string> dirs;
  std::optional<std::string> report_out;
  report->add_option("--dir", dirs, "Run directory (repeat to compare modes)")->required();
  report->add_option("--out", report_out, "Where to write the comparison table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, mode, cycles, epochs, seed, out);
    if (*resume) return cmd_resume(checkpoint_path, remaining);
    return cmd_report(dirs, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CheckpointCorrupt& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const UnsupportedVersion& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return kExitArtifacts;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
