#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "rulebo/acquisition.hpp"
#include "rulebo/controller.hpp"
#include "rulebo/errors.hpp"
#include "rulebo/synthetic.hpp"
#include "support/curves.hpp"
#include "support/spaces.hpp"

using namespace rulebo;

namespace {

// In-process trainee returning scripted curves and logging every request.
class Scripted : public Trainee {
 public:
  using Script = std::function<TrainOutcome(const TrainRequest&)>;
  explicit Scripted(Script s) : script_(std::move(s)) {}
  std::string name() const override { return "scripted"; }
  TrainOutcome train(const TrainRequest& req) override {
    requests.push_back(req);
    return script_(req);
  }
  std::vector<TrainRequest> requests;

 private:
  Script script_;
};

TrainOutcome with_curve(const History& h, double objective) {
  TrainOutcome o;
  o.history = h;
  o.result = curves::result_of(h);
  o.result.objective = objective;
  return o;
}

// Clean curves whose final validation loss is a quadratic in x.
TrainOutcome quadratic(const TrainRequest& req) {
  const double x = as_double(req.assignment.at("x"));
  auto h = curves::clean();
  h.val_loss.back() = 0.1 + (x - 0.3) * (x - 0.3);
  return with_curve(h, h.val_loss.back());
}

ExperimentConfig config_1d(RunMode mode, int cycles) {
  ExperimentConfig c;
  c.space = SearchSpace({{"x", RealLinear{0, 1}}});
  c.mode = mode;
  c.cycles = cycles;
  c.epochs = curves::kEpochs;
  c.seed = 5;
  c.acquisition.candidate_count = 256;
  return c;
}

ExperimentConfig synthetic_config(RunMode mode, int cycles, std::uint64_t seed) {
  ExperimentConfig c;
  c.space = spaces::cnn();
  for (const char* n : {"conv1_units", "conv2_units", "fc_units"}) c.model.layers.push_back({"dense", n});
  c.mode = mode;
  c.cycles = cycles;
  c.epochs = 30;
  c.seed = seed;
  c.acquisition.candidate_count = 256;
  return c;
}

Observation observation(const SearchSpace& s, Assignment a, double y, int cycle) {
  Observation o;
  o.point = encode(s, a);
  o.assignment = std::move(a);
  o.objective = y;
  o.cycle = cycle;
  return o;
}

const std::filesystem::path kTmp = std::filesystem::temp_directory_path() / "rulebo_controller_test";

}  // namespace

TEST_CASE("n = 0 trains once") {
  Scripted t(quadratic);
  const auto s = run(config_1d(RunMode::tuner, 0), t);
  CHECK(s.trainings == 1);
  CHECK(t.requests.size() == 1);
  CHECK(s.records[0].branch == "initial");
}

TEST_CASE("n cycles train n + 1 times in every mode") {
  for (auto mode : {RunMode::tuner, RunMode::plain_bo, RunMode::random}) {
    for (int n : {1, 3, 5}) {
      Scripted t(quadratic);
      const auto s = run(config_1d(mode, n), t);
      CHECK(s.trainings == n + 1);
      CHECK(t.requests.size() == static_cast<std::size_t>(n + 1));
      for (std::size_t i = 0; i < s.records.size(); ++i) CHECK(s.records[i].cycle == static_cast<int>(i));
    }
  }
}

TEST_CASE("branch labels per mode") {
  Scripted a(quadratic);
  const auto plain = run(config_1d(RunMode::plain_bo, 4), a);
  CHECK(plain.records[1].branch == "bo_random");
  for (int i = 2; i <= 4; ++i) CHECK(plain.records[static_cast<std::size_t>(i)].branch == "bo");
  Scripted b(quadratic);
  const auto rnd = run(config_1d(RunMode::random, 3), b);
  for (int i = 1; i <= 3; ++i) CHECK(rnd.records[static_cast<std::size_t>(i)].branch == "random");
}

TEST_CASE("retrain happens exactly when a directive is newly added") {
  // Always overfits: cycle 1 adds L2 and BN, later cycles have nothing new.
  Scripted t([](const TrainRequest&) {
    const auto h = curves::gap();
    return with_curve(h, h.val_loss.back());
  });
  auto cfg = config_1d(RunMode::tuner, 4);
  const auto s = run(cfg, t);
  CHECK(s.records[1].branch == "retrain");
  CHECK(s.records[1].issues.front().kind == IssueKind::overfitting);
  CHECK(t.requests[1].directives == std::vector<std::string>{"l2_regularization", "batch_normalization"});
  CHECK(t.requests[1].assignment.count("l2_lambda") == 1);
  for (int i = 2; i <= 4; ++i) CHECK(s.records[static_cast<std::size_t>(i)].branch != "retrain");
  CHECK(t.requests[0].directives.empty());
}

TEST_CASE("space mutation without a new directive is not a retrain") {
  Scripted t([](const TrainRequest&) {
    const auto h = curves::high_loss();
    return with_curve(h, h.val_loss.back());
  });
  auto cfg = config_1d(RunMode::tuner, 3);
  cfg.space = SearchSpace({{"units", IntegerRange{16, 48}, Role::unit_count}});
  const auto s = run(cfg, t);
  CHECK(s.records[1].issues.front().kind == IssueKind::underfitting);
  CHECK(s.records[1].actions.size() == 1);
  CHECK(s.records[1].branch != "retrain");
  for (const auto& r : s.records) CHECK(r.branch != "retrain");
  CHECK(as_double(t.requests[1].assignment.at("units")) >= 32);
}

TEST_CASE("plain BO never diagnoses") {
  Scripted t([](const TrainRequest&) {
    const auto h = curves::gap();
    return with_curve(h, h.val_loss.back());
  });
  const auto s = run(config_1d(RunMode::plain_bo, 3), t);
  for (const auto& r : s.records) {
    CHECK(r.issues.empty());
    CHECK(r.actions.empty());
  }
  for (const auto& req : t.requests) CHECK(req.directives.empty());
}

TEST_CASE("short histories skip diagnosis with a note") {
  Scripted t([](const TrainRequest&) {
    History h;
    h.push(1, 1, 0.5, 0.5);
    h.push(0.9, 0.9, 0.5, 0.5);
    return with_curve(h, 0.9);
  });
  const auto s = run(config_1d(RunMode::tuner, 1), t);
  REQUIRE_FALSE(s.records[1].notes.empty());
  CHECK(s.records[1].notes.front().rfind("diagnosis skipped", 0) == 0);
}

TEST_CASE("failed trainings are penalized with the worst objective") {
  int calls = 0;
  Scripted t([&](const TrainRequest& req) {
    if (++calls == 3) throw TraineeCrashed("boom");
    return quadratic(req);
  });
  Controller c(config_1d(RunMode::plain_bo, 3), t);
  auto ckpt = c.start();
  c.advance(ckpt, 3);
  const auto& r = ckpt.records[2];
  CHECK(r.failed);
  CHECK(r.failure == "boom");
  CHECK(r.objective == std::max(ckpt.records[0].objective, ckpt.records[1].objective));
  CHECK(ckpt.observations[2].failed);
  CHECK(ckpt.observations[2].eligible);
  CHECK(ckpt.records[3].notes.empty());
  CHECK(summarize(ckpt).best_objective == std::min(ckpt.records[0].objective, std::min(ckpt.records[1].objective, ckpt.records[3].objective)));
}

TEST_CASE("the first training failing is penalized with 1e6") {
  Scripted t([](const TrainRequest&) -> TrainOutcome { throw TraineeCrashed("nope"); });
  const auto s = run(config_1d(RunMode::tuner, 1), t);
  CHECK(s.records[0].objective == 1e6);
  CHECK(s.records[1].notes.front() == "diagnosis skipped: previous training failed");
}

TEST_CASE("objective follows the configured kind") {
  EvalResult r{0.4, 0.8, 123.0};
  CHECK(objective_of(r, ObjectiveKind::val_loss) == 0.4);
  CHECK(objective_of(r, ObjectiveKind::neg_val_acc) == -0.8);
}

TEST_CASE("running best is non-increasing") {
  Scripted t(quadratic);
  const auto s = run(config_1d(RunMode::plain_bo, 6), t);
  for (std::size_t i = 1; i < s.records.size(); ++i)
    CHECK(s.records[i].best_objective <= s.records[i - 1].best_objective);
}

TEST_CASE("runs are deterministic given the seed") {
  SyntheticTrainee t1(RoleBindings::from_space(spaces::cnn()));
  SyntheticTrainee t2(RoleBindings::from_space(spaces::cnn()));
  auto a = run(synthetic_config(RunMode::tuner, 4, 3), t1);
  auto b = run(synthetic_config(RunMode::tuner, 4, 3), t2);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].assignment == b.records[i].assignment);
    CHECK(a.records[i].objective == b.records[i].objective);
    CHECK(a.records[i].actions == b.records[i].actions);
  }
}

TEST_CASE("resuming from any boundary reproduces the uninterrupted run") {
  SyntheticTrainee t(RoleBindings::from_space(spaces::cnn()));
  const auto cfg = synthetic_config(RunMode::tuner, 5, 8);
  Controller full(cfg, t);
  std::vector<Checkpoint> snapshots;
  full.on_checkpoint = [&](const Checkpoint& c) { snapshots.push_back(c); };
  auto ref = full.start();
  full.advance(ref, cfg.cycles);
  REQUIRE(snapshots.size() == 6);

  for (const auto& snap : snapshots) {
    auto resumed = checkpoint_from_json(to_json(snap));
    Controller c(cfg, t);
    c.advance(resumed, cfg.cycles);
    REQUIRE(resumed.records.size() == ref.records.size());
    for (auto& r : resumed.records) r.wall_clock_s = 0;
    auto expect = ref;
    for (auto& r : expect.records) r.wall_clock_s = 0;
    CHECK(resumed == expect);
  }
}

TEST_CASE("should_stop ends the loop at a boundary") {
  Scripted t(quadratic);
  Controller c(config_1d(RunMode::plain_bo, 5), t);
  auto ckpt = c.start();
  int polls = 0;
  c.should_stop = [&] { return ++polls > 2; };
  c.advance(ckpt, 5);
  CHECK(ckpt.cycle == 2);
  CHECK(ckpt.records.size() == 3);
}

TEST_CASE("invalid configs are ConfigError") {
  Scripted t(quadratic);
  auto cfg = config_1d(RunMode::tuner, 1);
  cfg.epochs = 0;
  CHECK_THROWS_AS(Controller(cfg, t), ConfigError);
  cfg = config_1d(RunMode::tuner, 1);
  cfg.space = SearchSpace{};
  CHECK_THROWS_AS(Controller(cfg, t), ConfigError);
}

TEST_CASE("checkpoint round-trips through a file") {
  std::filesystem::create_directories(kTmp);
  SyntheticTrainee t(RoleBindings::from_space(spaces::cnn()));
  Controller c(synthetic_config(RunMode::tuner, 3, 2), t);
  auto ckpt = c.start();
  c.advance(ckpt, 3);
  const auto path = kTmp / "ckpt.json";
  save_checkpoint(ckpt, path);
  CHECK(load_checkpoint(path) == ckpt);
  CHECK_FALSE(std::filesystem::exists(kTmp / "ckpt.json.tmp"));
}

TEST_CASE("truncated and foreign checkpoints are rejected") {
  std::filesystem::create_directories(kTmp);
  Scripted t(quadratic);
  Controller c(config_1d(RunMode::tuner, 1), t);
  auto ckpt = c.start();
  const auto text = to_json(ckpt).dump(2);

  const auto path = kTmp / "bad.json";
  std::ofstream(path) << text.substr(0, text.size() / 2);
  try {
    load_checkpoint(path);
    FAIL("expected CheckpointCorrupt");
  } catch (const CheckpointCorrupt& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }

  auto j = to_json(ckpt);
  j["format_version"] = 2;
  std::ofstream(path, std::ios::trunc) << j.dump();
  CHECK_THROWS_AS(load_checkpoint(path), UnsupportedVersion);

  j = to_json(ckpt);
  j.erase("observations");
  std::ofstream(path, std::ios::trunc) << j.dump();
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointCorrupt);

  std::ofstream(path, std::ios::trunc) << "";
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointCorrupt);
  CHECK_THROWS_AS(load_checkpoint(kTmp / "absent.json"), Error);
}

TEST_CASE("migration: identical spaces change nothing") {
  const SearchSpace s({{"lr", RealLog{1e-5, 1e-1}}});
  Checkpoint c;
  c.space = s;
  c.observations.push_back(observation(s, {{"lr", 1e-3}}, 0.5, 0));
  c.best_y = 0.5;
  CHECK(migrate_checkpoint(c, s, s) == c);
}

TEST_CASE("migration: lowering the upper bound past three of five observations") {
  const SearchSpace s({{"lr", RealLog{1e-5, 1e-1}, Role::learning_rate}});
  Checkpoint c;
  c.space = s;
  const std::vector<double> lrs{1e-4, 1e-3, 5e-3, 2e-2, 5e-2};
  const std::vector<double> ys{0.9, 0.8, 0.3, 0.2, 0.7};
  for (std::size_t i = 0; i < lrs.size(); ++i) c.observations.push_back(observation(s, {{"lr", lrs[i]}}, ys[i], static_cast<int>(i)));
  c.best_y = 0.2;
  const SearchSpace shrunk({{"lr", RealLog{1e-5, 4e-3}, Role::learning_rate}});
  const auto m = migrate_checkpoint(c, s, shrunk);
  int eligible = 0;
  for (const auto& o : m.observations) eligible += o.eligible ? 1 : 0;
  CHECK(eligible == 2);
  CHECK(m.observations.size() == 5);
  REQUIRE(m.best_y.has_value());
  CHECK(*m.best_y == 0.8);
  CHECK(m.observations[1].point == encode(shrunk, m.observations[1].assignment));
}

TEST_CASE("migration: adding a dimension pads with its midpoint") {
  const SearchSpace s({{"x", RealLinear{0, 1}}});
  Checkpoint c;
  c.space = s;
  for (int i = 0; i < 4; ++i) c.observations.push_back(observation(s, {{"x", 0.2 * i}}, 1.0 - 0.1 * i, i));
  c.best_y = 0.7;
  const SearchSpace grown({{"x", RealLinear{0, 1}}, default_l2_dimension()});
  const auto m = migrate_checkpoint(c, s, grown);
  for (const auto& o : m.observations) {
    CHECK(o.eligible);
    CHECK(o.stale);
    REQUIRE(o.point.size() == 2);
    CHECK(o.point[1] == 0.5);
    CHECK(std::abs(as_double(o.assignment.at("l2_lambda")) - std::pow(10.0, -3.5)) < 1e-15);
  }
  CHECK(*m.best_y == 0.7);
}

TEST_CASE("migration: incompatible spaces") {
  const SearchSpace s({{"x", RealLinear{0, 1}}, {"n", IntegerRange{1, 9}}});
  Checkpoint c;
  c.space = s;
  CHECK_THROWS_AS(migrate_checkpoint(c, s, SearchSpace({{"x", RealLinear{0, 1}}})), IncompatibleSpaces);
  CHECK_THROWS_AS(migrate_checkpoint(c, s, SearchSpace({{"n", IntegerRange{1, 9}}, {"x", RealLinear{0, 1}}})),
                  IncompatibleSpaces);
  CHECK_THROWS_AS(migrate_checkpoint(c, s, SearchSpace({{"x", RealLinear{0, 2}}, {"n", IntegerRange{1, 9}}})),
                  IncompatibleSpaces);
  CHECK_THROWS_AS(migrate_checkpoint(c, s, SearchSpace({{"x", RealLog{0.1, 1}}, {"n", IntegerRange{1, 9}}})),
                  IncompatibleSpaces);
  CHECK_THROWS_AS(migrate_checkpoint(c, SearchSpace({{"y", RealLinear{0, 1}}}), s), IncompatibleSpaces);
}

TEST_CASE("bo_step with no observations samples at random") {
  Scripted t(quadratic);
  const auto cfg = config_1d(RunMode::plain_bo, 1);
  Checkpoint c;
  c.space = cfg.space;
  const auto next = bo_step(c, cfg.space, t, cfg);
  CHECK(next.cycle == 1);
  CHECK(next.records.back().branch == "bo_random");
  CHECK(next.observations.size() == 1);
  CHECK_THROWS_AS(bo_step(c, SearchSpace({{"y", RealLinear{0, 1}}}), t, cfg), IncompatibleSpaces);
}

TEST_CASE("bo_step proposes near the EI maximum on a 1-d quadratic") {
  Scripted t(quadratic);
  const auto cfg = config_1d(RunMode::plain_bo, 1);
  Checkpoint c;
  c.space = cfg.space;
  c.rng_state = Rng(4).state();
  const std::vector<double> xs{0.05, 0.25, 0.5, 0.75, 0.95};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double y = 0.1 + (xs[i] - 0.3) * (xs[i] - 0.3);
    c.observations.push_back(observation(cfg.space, {{"x", xs[i]}}, y, static_cast<int>(i)));
    c.best_y = std::min(c.best_y.value_or(1e9), y);
  }
  const auto before = *c.best_y;
  const auto next = bo_step(c, cfg.space, t, cfg);
  CHECK(next.records.back().branch == "bo");
  CHECK(*next.best_y <= before);

  Eigen::MatrixXd x(5, 1);
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    x(i, 0) = xs[static_cast<std::size_t>(i)];
    y(i) = c.observations[static_cast<std::size_t>(i)].objective;
  }
  const auto model = fit(x, y, cfg.gp);
  auto ei_at = [&](double u) {
    const auto p = model.posterior(std::vector<double>{u});
    return expected_improvement(p.mean, std::sqrt(p.variance), before);
  };
  double grid_max = 0.0;
  for (int i = 0; i <= 10000; ++i) grid_max = std::max(grid_max, ei_at(i / 10000.0));
  const double chosen = as_double(t.requests.back().assignment.at("x"));
  CHECK(ei_at(chosen) >= 0.99 * grid_max);
}
