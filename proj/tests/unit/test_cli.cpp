#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "rulebo/artifacts.hpp"
#include "rulebo/controller.hpp"

using namespace rulebo;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "rulebo_cli_test";
const fs::path kConfig = fs::path(RULEBO_CONFIG_DIR) / "synthetic_tuner.json";

int cli(const std::string& args) {
  const std::string cmd = std::string("RULEBO_LOG=quiet '") + RULEBO_CLI + "' " + args + " > '" +
                          (kRoot / "stdout.txt").string() + "' 2> '" + (kRoot / "stderr.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string out_dir(const std::string& name) {
  const auto d = kRoot / name;
  fs::remove_all(d);
  return d.string();
}

struct Setup {
  Setup() { fs::create_directories(kRoot); }
};
const Setup kSetup;

}  // namespace

TEST_CASE("run with zero cycles trains once") {
  const auto dir = out_dir("zero");
  CHECK(cli("run --config '" + kConfig.string() + "' --cycles 0 --out '" + dir + "'") == 0);
  const auto ckpt = load_checkpoint(fs::path(dir) / run_files::kCheckpoint);
  CHECK(ckpt.records.size() == 1);
  CHECK(ckpt.cycle == 0);
  CHECK(read_text(kRoot / "stdout.txt").find("trainings: 1") != std::string::npos);
}

TEST_CASE("run writes every artifact") {
  const auto dir = out_dir("full");
  CHECK(cli("run --config '" + kConfig.string() + "' --cycles 3 --epochs 10 --out '" + dir + "'") == 0);
  for (const char* f : {run_files::kConfig, run_files::kCheckpoint, run_files::kCycles, run_files::kSummary,
                        run_files::kCurves})
    CHECK(fs::exists(fs::path(dir) / f));
  CHECK(fs::exists(fs::path(dir) / "plots" / "cycle_3_loss.svg"));
  const auto snap = read_text(fs::path(dir) / run_files::kConfig);
  CHECK(snap.find("\"epochs\": 10") != std::string::npos);
}

TEST_CASE("seed override changes the run") {
  const auto a = out_dir("seed_a"), b = out_dir("seed_b"), c = out_dir("seed_c");
  CHECK(cli("run --config '" + kConfig.string() + "' --cycles 2 --seed 1 --out '" + a + "'") == 0);
  CHECK(cli("run --config '" + kConfig.string() + "' --cycles 2 --seed 2 --out '" + b + "'") == 0);
  CHECK(cli("run --config '" + kConfig.string() + "' --cycles 2 --seed 1 --out '" + c + "'") == 0);
  const auto sa = read_text(fs::path(a) / run_files::kSummary);
  CHECK(sa != read_text(fs::path(b) / run_files::kSummary));
  CHECK(sa == read_text(fs::path(c) / run_files::kSummary));
}

TEST_CASE("resume continues to the same result as an uninterrupted run") {
  const auto whole = out_dir("whole"), split = out_dir("split");
  CHECK(cli("run --config '" + kConfig.string() + "' --cycles 4 --out '" + whole + "'") == 0);
  CHECK(cli("run --config '" + kConfig.string() + "' --cycles 1 --out '" + split + "'") == 0);
  const auto ckpt = (fs::path(split) / run_files::kCheckpoint).string();
  CHECK(cli("resume --checkpoint '" + ckpt + "' --cycles 0") == 0);
  CHECK(load_checkpoint(ckpt).cycle == 1);
  CHECK(cli("resume --checkpoint '" + ckpt + "' --cycles 3") == 0);
  CHECK(read_text(fs::path(split) / run_files::kSummary) == read_text(fs::path(whole) / run_files::kSummary));
}

TEST_CASE("report compares runs") {
  const auto a = out_dir("rep_tuner"), b = out_dir("rep_plain"), out = out_dir("rep_out");
  CHECK(cli("run --config '" + kConfig.string() + "' --cycles 2 --out '" + a + "'") == 0);
  CHECK(cli("run --config '" + kConfig.string() + "' --mode plain_bo --cycles 2 --out '" + b + "'") == 0);
  CHECK(cli("report --dir '" + a + "' --dir '" + b + "' --out '" + out + "'") == 0);
  CHECK(fs::exists(fs::path(out) / "comparison.csv"));
  CHECK(fs::exists(fs::path(out) / "comparison.txt"));
  CHECK(read_text(kRoot / "stdout.txt").find("plots written: 8") != std::string::npos);
}

TEST_CASE("exit code 2 for configuration and usage errors") {
  CHECK(cli("run --config /nonexistent/config.json") == 2);
  CHECK(cli("run --config '" + kConfig.string() + "' --mode grid --out '" + out_dir("bad_mode") + "'") == 2);
  CHECK(cli("run --config '" + kConfig.string() + "' --epochs 0 --out '" + out_dir("bad_epochs") + "'") == 2);
  CHECK(cli("run") == 2);
  CHECK(cli("frobnicate") == 2);
  const auto bad = kRoot / "bad.json";
  std::ofstream(bad) << R"({"space": [], "trainee": {"builtin": "synthetic"}})";
  CHECK(cli("run --config '" + bad.string() + "' --out '" + out_dir("bad_space") + "'") == 2);
}

TEST_CASE("exit code 3 for corrupt or newer checkpoints") {
  const auto dir = out_dir("corrupt");
  CHECK(cli("run --config '" + kConfig.string() + "' --cycles 0 --out '" + dir + "'") == 0);
  const auto ckpt = fs::path(dir) / run_files::kCheckpoint;
  const auto text = read_text(ckpt);
  write_text(ckpt, text.substr(0, text.size() / 3));
  CHECK(cli("resume --checkpoint '" + ckpt.string() + "' --cycles 1") == 3);
  CHECK(read_text(kRoot / "stderr.txt").find("byte") != std::string::npos);

  auto j = json::parse(text);
  j["format_version"] = 99;
  write_text(ckpt, j.dump());
  CHECK(cli("resume --checkpoint '" + ckpt.string() + "' --cycles 1") == 3);
}

TEST_CASE("exit code 4 for missing artifacts") {
  const auto dir = out_dir("missing");
  fs::create_directories(dir);
  CHECK(cli("report --dir '" + dir + "'") == 4);
}

TEST_CASE("help exits cleanly") { CHECK(cli("--help") == 0); }

TEST_CASE("resume without the config snapshot is a missing artifact") {
  const auto dir = out_dir("no_snapshot");
  CHECK(cli("run --config '" + kConfig.string() + "' --cycles 0 --out '" + dir + "'") == 0);
  fs::remove(fs::path(dir) / run_files::kConfig);
  CHECK(cli("resume --checkpoint '" + (fs::path(dir) / run_files::kCheckpoint).string() + "' --cycles 1") == 4);
}

TEST_CASE("SIGINT stops at a cycle boundary with exit code 130") {
  const auto dir = out_dir("interrupted");
  const auto cfg = kRoot / "stub.json";
  std::ofstream(cfg) << json{{"space", json::parse(R"([{"name":"learning_rate","kind":"real_log","min":1e-4,"max":1,"role":"learning_rate"}])")},
                             {"trainee", {{"command", {RULEBO_STUB_TRAINEE}}, {"timeout_s", 10}}},
                             {"mode", "plain_bo"},
                             {"cycles", 100000},
                             {"epochs", 2}}
                             .dump();
  CHECK(cli("run --config '" + cfg.string() + "' --out '" + dir + "' 2>/dev/null & pid=$!; sleep 1.5; kill -INT $pid; wait $pid") ==
        130);
  const auto ckpt = load_checkpoint(fs::path(dir) / run_files::kCheckpoint);
  CHECK(ckpt.cycle >= 1);
  CHECK(ckpt.records.size() == static_cast<std::size_t>(ckpt.cycle) + 1);
  for (const auto& r : ckpt.records) CHECK_FALSE(r.failed);
}
