#include "rulebo/config.hpp"

#include <fstream>

#include "rulebo/dataset.hpp"
#include "rulebo/mlp.hpp"
#include "rulebo/protocol.hpp"
#include "rulebo/synthetic.hpp"

namespace rulebo {

std::string_view mode_name(RunMode m) {
  switch (m) {
    case RunMode::tuner: return "tuner";
    case RunMode::plain_bo: return "plain_bo";
    case RunMode::random: return "random";
  }
  return "";
}

RunMode parse_mode(std::string_view s) {
  for (auto m : {RunMode::tuner, RunMode::plain_bo, RunMode::random})
    if (mode_name(m) == s) return m;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected tuner, plain_bo or random)");
}

std::string_view objective_name(ObjectiveKind k) {
  return k == ObjectiveKind::val_loss ? "val_loss" : "neg_val_acc";
}

ObjectiveKind parse_objective(std::string_view s) {
  if (s == "val_loss") return ObjectiveKind::val_loss;
  if (s == "neg_val_acc") return ObjectiveKind::neg_val_acc;
  throw ConfigError("unknown objective '" + std::string(s) + "' (expected val_loss or neg_val_acc)");
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    c.space = space_from_json(j.at("space"));
    if (c.space.empty()) throw ConfigError("space must define at least one dimension");
    if (j.contains("model")) {
      c.model = model_spec_from_json(j.at("model"));
    } else {
      for (const auto& u : c.space.names_with_role(Role::unit_count)) c.model.layers.push_back({"dense", u});
    }
    const auto& t = j.at("trainee");
    c.trainee.builtin = t.value("builtin", std::string());
    c.trainee.command = t.value("command", std::vector<std::string>{});
    c.trainee.timeout_s = t.value("timeout_s", c.trainee.timeout_s);
    c.trainee.synthetic = t.value("synthetic", json::object());
    c.trainee.dataset = t.value("dataset", json::object());
    if (c.trainee.builtin.empty() && c.trainee.command.empty())
      throw ConfigError("trainee needs either 'builtin' or 'command'");
    if (!c.trainee.builtin.empty() && c.trainee.builtin != "synthetic" && c.trainee.builtin != "mlp")
      throw ConfigError("unknown builtin trainee '" + c.trainee.builtin + "'");
    if (!(c.trainee.timeout_s > 0.0)) throw ConfigError("trainee timeout_s must be positive");

    c.mode = parse_mode(j.value("mode", std::string("tuner")));
    c.cycles = j.value("cycles", c.cycles);
    c.epochs = j.value("epochs", c.epochs);
    if (c.cycles < 0) throw ConfigError("cycles must be >= 0");
    if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
    c.objective = parse_objective(j.value("objective", std::string("val_loss")));
    c.thresholds = thresholds_from_json(j.value("diagnosis", json::object()));
    c.acquisition = acquisition_from_json(j.value("acquisition", json::object()));
    c.gp = fit_config_from_json(j.value("gp", json::object()));
    if (j.contains("rules")) c.rules = rule_table_from_json(j.at("rules"));
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  json t = {{"timeout_s", c.trainee.timeout_s}};
  if (!c.trainee.builtin.empty()) t["builtin"] = c.trainee.builtin;
  if (!c.trainee.command.empty()) t["command"] = c.trainee.command;
  if (!c.trainee.synthetic.empty()) t["synthetic"] = c.trainee.synthetic;
  if (!c.trainee.dataset.empty()) t["dataset"] = c.trainee.dataset;
  return {{"space", to_json(c.space)},
          {"model", to_json(c.model)},
          {"trainee", t},
          {"mode", std::string(mode_name(c.mode))},
          {"cycles", c.cycles},
          {"epochs", c.epochs},
          {"objective", std::string(objective_name(c.objective))},
          {"diagnosis", to_json(c.thresholds)},
          {"acquisition", to_json(c.acquisition)},
          {"gp", to_json(c.gp)},
          {"rules", to_json(c.rules)},
          {"seed", c.seed},
          {"output_dir", c.output_dir}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  if (j.contains("trainee") && j["trainee"].contains("dataset")) {
    auto& ds = j["trainee"]["dataset"];
    for (const char* key : {"images", "labels"}) {
      if (ds.contains(key) && ds[key].is_string()) {
        std::filesystem::path p = ds[key].get<std::string>();
        if (p.is_relative()) ds[key] = (path.parent_path() / p).lexically_normal().string();
      }
    }
  }
  return config_from_json(j);
}

Dataset load_dataset(const json& spec) {
  const auto kind = spec.value("kind", std::string("blobs"));
  if (kind == "blobs") {
    return make_blobs(spec.value("n_per_class", 50), spec.value("n_classes", 3), spec.value("n_features", 2),
                      spec.value("spread", 1.0), spec.value("seed", std::uint64_t{0}));
  }
  if (kind == "idx") {
    const auto images = parse_idx(std::filesystem::path(spec.at("images").get<std::string>()));
    const auto labels = parse_idx(std::filesystem::path(spec.at("labels").get<std::string>()));
    return dataset_from_idx(images, labels, spec.value("limit", std::size_t{0}), spec.value("val_fraction", 0.2),
                            spec.value("seed", std::uint64_t{0}));
  }
  throw ConfigError("unknown dataset kind '" + kind + "'");
}

std::unique_ptr<Trainee> make_trainee(const ExperimentConfig& config) {
  const auto roles = RoleBindings::from_space(config.space);
  if (config.trainee.builtin == "synthetic")
    return std::make_unique<SyntheticTrainee>(roles, synthetic_constants_from_json(config.trainee.synthetic));
  if (config.trainee.builtin == "mlp") return std::make_unique<MlpTrainee>(load_dataset(config.trainee.dataset), roles);
  return std::make_unique<ExternalTrainee>(config.trainee.command, config.trainee.timeout_s);
}

}  // namespace rulebo
