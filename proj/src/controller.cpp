#include "rulebo/controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "rulebo/acquisition.hpp"
#include "rulebo/errors.hpp"
#include "rulebo/log.hpp"
#include "rulebo/surrogate.hpp"

namespace rulebo {

// ---------------------------------------------------------------------------
// Serialization

json to_json(const Observation& o) {
  return {{"point", o.point},       {"assignment", to_json(o.assignment)},
          {"objective", o.objective}, {"cycle", o.cycle},
          {"eligible", o.eligible}, {"stale", o.stale},
          {"failed", o.failed}};
}

static Observation observation_from_json(const json& j) {
  Observation o;
  o.point = j.at("point").get<std::vector<double>>();
  o.assignment = assignment_from_json(j.at("assignment"));
  o.objective = j.at("objective").get<double>();
  o.cycle = j.at("cycle").get<int>();
  o.eligible = j.at("eligible").get<bool>();
  o.stale = j.at("stale").get<bool>();
  o.failed = j.at("failed").get<bool>();
  return o;
}

json to_json(const CycleRecord& r) {
  return {{"cycle", r.cycle},
          {"branch", r.branch},
          {"assignment", to_json(r.assignment)},
          {"directives", r.directives},
          {"objective", r.objective},
          {"best_objective", r.best_objective},
          {"failed", r.failed},
          {"failure", r.failure},
          {"issues", to_json(r.issues)},
          {"actions", r.actions},
          {"notes", r.notes},
          {"history", to_json(r.history)},
          {"result", to_json(r.result)},
          {"wall_clock_s", r.wall_clock_s}};
}

static CycleRecord record_from_json(const json& j) {
  CycleRecord r;
  r.cycle = j.at("cycle").get<int>();
  r.branch = j.at("branch").get<std::string>();
  r.assignment = assignment_from_json(j.at("assignment"));
  r.directives = j.at("directives").get<std::vector<std::string>>();
  r.objective = j.at("objective").get<double>();
  r.best_objective = j.at("best_objective").get<double>();
  r.failed = j.at("failed").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  r.issues = report_from_json(j.at("issues"));
  r.actions = j.at("actions").get<std::vector<std::string>>();
  r.notes = j.at("notes").get<std::vector<std::string>>();
  r.history = history_from_json(j.at("history"));
  r.result = eval_result_from_json(j.at("result"));
  r.wall_clock_s = j.at("wall_clock_s").get<double>();
  return r;
}

json to_json(const Checkpoint& c) {
  json obs = json::array();
  for (const auto& o : c.observations) obs.push_back(to_json(o));
  json recs = json::array();
  for (const auto& r : c.records) recs.push_back(to_json(r));
  return {{"format_version", c.format_version},
          {"space", to_json(c.space)},
          {"model", to_json(c.model)},
          {"observations", obs},
          {"rng_state", c.rng_state},
          {"cycle", c.cycle},
          {"best_y", c.best_y ? json(*c.best_y) : json(nullptr)},
          {"best_assignment", to_json(c.best_assignment)},
          {"records", recs}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || !j.contains("format_version") || !j["format_version"].is_number_integer())
    throw CheckpointCorrupt("checkpoint has no integer format_version");
  const int version = j["format_version"].get<int>();
  if (version > Checkpoint::kFormatVersion)
    throw UnsupportedVersion("checkpoint format_version " + std::to_string(version) +
                             " is newer than supported version " +
                             std::to_string(Checkpoint::kFormatVersion));
  if (version < 1) throw CheckpointCorrupt("invalid checkpoint format_version " + std::to_string(version));
  try {
    Checkpoint c;
    c.format_version = version;
    c.space = space_from_json(j.at("space"));
    c.model = model_spec_from_json(j.at("model"));
    for (const auto& o : j.at("observations")) c.observations.push_back(observation_from_json(o));
    c.rng_state = j.at("rng_state").get<std::string>();
    Rng probe;
    probe.restore(c.rng_state);
    c.cycle = j.at("cycle").get<int>();
    if (!j.at("best_y").is_null()) c.best_y = j.at("best_y").get<double>();
    c.best_assignment = assignment_from_json(j.at("best_assignment"));
    for (const auto& r : j.at("records")) c.records.push_back(record_from_json(r));
    return c;
  } catch (const json::exception& e) {
    throw CheckpointCorrupt(std::string("checkpoint is missing or mistypes a field: ") + e.what());
  } catch (const CheckpointCorrupt&) {
    throw;
  } catch (const Error& e) {
    throw CheckpointCorrupt(std::string("checkpoint content is invalid: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write checkpoint " + tmp.string());
    out << to_json(ckpt).dump(1) << '\n';
    if (!out) throw InvalidInput("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointCorrupt("cannot open checkpoint " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointCorrupt("checkpoint " + path.string() + " is not valid JSON at byte " +
                            std::to_string(e.byte) + " of " + std::to_string(text.size()));
  }
  return checkpoint_from_json(j);
}

// ---------------------------------------------------------------------------
// Loop mechanics

double objective_of(const EvalResult& r, ObjectiveKind kind) {
  return kind == ObjectiveKind::val_loss ? r.final_val_loss : -r.final_val_acc;
}

namespace {

void recompute_best(Checkpoint& c) {
  c.best_y.reset();
  c.best_assignment.clear();
  for (const auto& o : c.observations) {
    if (!o.eligible) continue;
    if (!c.best_y || o.objective < *c.best_y) {
      c.best_y = o.objective;
      c.best_assignment = o.assignment;
    }
  }
}

// Best measured objective among successful trainings, else the penalty.
double running_best(const std::vector<CycleRecord>& records, double current, bool current_failed) {
  std::optional<double> best;
  for (const auto& r : records)
    if (!r.failed && (!best || r.objective < *best)) best = r.objective;
  if (!current_failed && (!best || current < *best)) best = current;
  return best ? *best : current;
}

struct Context {
  int cycle = 0;
  std::string branch;
  DiagnosisReport issues;
  std::vector<std::string> actions;
  std::vector<std::string> notes;
};

void train_and_record(Checkpoint& c, Trainee& trainee, const ExperimentConfig& cfg, Rng& rng,
                      Assignment assignment, Context ctx) {
  TrainRequest req;
  req.assignment = assignment;
  req.directives = directive_names(c.model.directives);
  req.epochs = cfg.epochs;
  req.seed = rng.next_u64();

  CycleRecord rec;
  rec.cycle = ctx.cycle;
  rec.branch = ctx.branch;
  rec.assignment = assignment;
  rec.directives = req.directives;
  rec.issues = std::move(ctx.issues);
  rec.actions = std::move(ctx.actions);
  rec.notes = std::move(ctx.notes);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    TrainOutcome out = trainee.train(req);
    validate(out.history);
    rec.history = std::move(out.history);
    rec.result = out.result;
    rec.objective = objective_of(out.result, cfg.objective);
    if (!std::isfinite(rec.objective)) throw InvalidInput("trainee reported a non-finite objective");
    for (auto& n : out.notes) rec.notes.push_back(std::move(n));
  } catch (const TrainingDiverged& e) {
    rec.failed = true;
    rec.failure = e.what();
    rec.history = e.partial();
  } catch (const Error& e) {
    rec.failed = true;
    rec.failure = e.what();
    rec.history = {};
    rec.result = {};
  }
  rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (rec.failed) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& o : c.observations) worst = std::max(worst, o.objective);
    rec.objective = std::isfinite(worst) ? worst : 1e6;
    log::warn("cycle " + std::to_string(rec.cycle) + ": training failed (" + rec.failure + ")");
  }
  rec.best_objective = running_best(c.records, rec.objective, rec.failed);

  Observation obs;
  obs.point = encode(c.space, assignment);
  obs.assignment = std::move(assignment);
  obs.objective = rec.objective;
  obs.cycle = rec.cycle;
  obs.failed = rec.failed;
  if (!c.best_y || obs.objective < *c.best_y) {
    c.best_y = obs.objective;
    c.best_assignment = obs.assignment;
  }
  c.observations.push_back(std::move(obs));

  for (const auto& n : rec.notes) log::info("cycle " + std::to_string(rec.cycle) + ": " + n);
  log::info("cycle " + std::to_string(rec.cycle) + " [" + rec.branch + "] objective " +
            format_value(rec.objective));
  c.records.push_back(std::move(rec));
}

void bo_train(Checkpoint& c, Trainee& trainee, const ExperimentConfig& cfg, Rng& rng, Context ctx) {
  std::vector<const Observation*> rows;
  for (const auto& o : c.observations)
    if (o.eligible && o.point.size() == c.space.size()) rows.push_back(&o);

  Assignment next;
  if (rows.size() < 2) {
    ctx.branch = "bo_random";
    ctx.notes.push_back("random proposal: fewer than two observations usable by the GP");
    next = sample_random(c.space, rng);
  } else {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(c.space.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t k = 0; k < c.space.size(); ++k)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i]->point[k];
      y(static_cast<Eigen::Index>(i)) = rows[i]->objective;
      best = std::min(best, rows[i]->objective);
    }
    try {
      const GpModel model = fit(x, y, cfg.gp);
      next = propose_next(model, c.space, best, rng, cfg.acquisition);
      ctx.branch = "bo";
    } catch (const NumericalFailure& e) {
      ctx.branch = "bo_random";
      ctx.notes.push_back(std::string("random proposal: ") + e.what());
      next = sample_random(c.space, rng);
    }
  }
  train_and_record(c, trainee, cfg, rng, std::move(next), std::move(ctx));
}

void check_config(const ExperimentConfig& cfg) {
  try {
    if (cfg.space.empty()) throw InvalidInput("space has no dimensions");
    if (cfg.epochs < 1) throw InvalidInput("epochs must be >= 1");
    if (cfg.cycles < 0) throw InvalidInput("cycles must be >= 0");
    validate(cfg.thresholds);
    validate(cfg.acquisition);
    validate(cfg.rules);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

Checkpoint migrate_checkpoint(const Checkpoint& ckpt, const SearchSpace& old_space,
                              const SearchSpace& new_space) {
  if (ckpt.space != old_space) throw IncompatibleSpaces("checkpoint was not recorded in the given old space");
  if (old_space == new_space) return ckpt;
  if (new_space.size() < old_space.size())
    throw IncompatibleSpaces("new space drops dimensions of the old space");
  for (std::size_t i = 0; i < old_space.size(); ++i) {
    const auto& a = old_space[i];
    const auto& b = new_space[i];
    if (a.name != b.name) throw IncompatibleSpaces("dimension '" + a.name + "' moved or was renamed");
    if (a.domain.index() != b.domain.index() || !domain_subset(b.domain, a.domain))
      throw IncompatibleSpaces("dimension '" + a.name + "' is not a shrink of its old domain");
  }

  Checkpoint out = ckpt;
  out.space = new_space;
  for (auto& o : out.observations) {
    for (std::size_t i = old_space.size(); i < new_space.size(); ++i) {
      const auto& dim = new_space[i];
      o.assignment[dim.name] = decode_value(dim.domain, 0.5);
      o.stale = true;
    }
    if (!o.eligible) continue;
    o.eligible = contains(new_space, o.assignment);
    if (!o.eligible) continue;
    o.point = encode(new_space, o.assignment);
    for (std::size_t i = old_space.size(); i < new_space.size(); ++i) o.point[i] = 0.5;
  }
  recompute_best(out);
  return out;
}

Checkpoint bo_step(Checkpoint ckpt, const SearchSpace& space, Trainee& trainee,
                   const ExperimentConfig& config) {
  if (ckpt.space != space) throw IncompatibleSpaces("bo_step: checkpoint space differs from the given space");
  Rng rng;
  if (!ckpt.rng_state.empty()) rng.restore(ckpt.rng_state);
  Context ctx;
  ctx.cycle = ckpt.cycle + 1;
  bo_train(ckpt, trainee, config, rng, std::move(ctx));
  ckpt.cycle += 1;
  ckpt.rng_state = rng.state();
  return ckpt;
}

Controller::Controller(ExperimentConfig config, Trainee& trainee)
    : config_(std::move(config)), trainee_(trainee) {
  check_config(config_);
}

Checkpoint Controller::start() {
  Checkpoint c;
  c.space = config_.space;
  c.model = config_.model;
  Rng rng(config_.seed);
  Context ctx;
  ctx.branch = "initial";
  train_and_record(c, trainee_, config_, rng, sample_random(c.space, rng), std::move(ctx));
  c.rng_state = rng.state();
  if (on_checkpoint) on_checkpoint(c);
  return c;
}

void Controller::step(Checkpoint& ckpt) {
  if (ckpt.records.empty()) throw InvalidInput("step needs a checkpoint with an initial training");
  Rng rng;
  rng.restore(ckpt.rng_state);
  Context ctx;
  ctx.cycle = ckpt.cycle + 1;

  switch (config_.mode) {
    case RunMode::tuner: {
      const CycleRecord& last = ckpt.records.back();
      if (last.failed) {
        ctx.notes.push_back("diagnosis skipped: previous training failed");
      } else {
        try {
          ctx.issues = diagnose(last.history, last.result, config_.thresholds);
        } catch (const InsufficientHistory& e) {
          ctx.notes.push_back(std::string("diagnosis skipped: ") + e.what());
        } catch (const EmptyHistory& e) {
          ctx.notes.push_back(std::string("diagnosis skipped: ") + e.what());
        }
      }
      TuneResult tr = tune(ctx.issues, ckpt.model, ckpt.space, config_.rules);
      for (const auto& a : tr.applied)
        ctx.actions.push_back(std::string(issue_name(a.issue)) + ":" + describe(a.action));
      for (auto& s : tr.skipped) ctx.notes.push_back(std::move(s));
      if (tr.space != ckpt.space) ckpt = migrate_checkpoint(ckpt, ckpt.space, tr.space);
      const bool model_changed = tr.model != ckpt.model;
      ckpt.model = std::move(tr.model);
      if (model_changed) {
        ctx.branch = "retrain";
        Assignment a = sample_random(ckpt.space, rng);
        train_and_record(ckpt, trainee_, config_, rng, std::move(a), std::move(ctx));
      } else {
        bo_train(ckpt, trainee_, config_, rng, std::move(ctx));
      }
      break;
    }
    case RunMode::plain_bo:
      bo_train(ckpt, trainee_, config_, rng, std::move(ctx));
      break;
    case RunMode::random: {
      ctx.branch = "random";
      Assignment a = sample_random(ckpt.space, rng);
      train_and_record(ckpt, trainee_, config_, rng, std::move(a), std::move(ctx));
      break;
    }
  }
  ckpt.cycle += 1;
  ckpt.rng_state = rng.state();
  if (on_checkpoint) on_checkpoint(ckpt);
}

void Controller::advance(Checkpoint& ckpt, int target_cycles) {
  while (ckpt.cycle < target_cycles) {
    if (should_stop && should_stop()) return;
    step(ckpt);
  }
}

Summary summarize(const Checkpoint& ckpt) {
  Summary s;
  s.records = ckpt.records;
  s.trainings = static_cast<int>(ckpt.records.size());
  const CycleRecord* best = nullptr;
  for (const auto& r : ckpt.records) {
    if (r.failed) continue;
    if (best == nullptr || r.objective < best->objective) best = &r;
  }
  if (best == nullptr && !ckpt.records.empty()) best = &ckpt.records.front();
  if (best != nullptr) {
    s.best_assignment = best->assignment;
    s.best_objective = best->objective;
  }
  return s;
}

Summary run(const ExperimentConfig& config, Trainee& trainee) {
  Controller c(config, trainee);
  Checkpoint ckpt = c.start();
  c.advance(ckpt, config.cycles);
  return summarize(ckpt);
}

}  // namespace rulebo
