#include "rulebo/json_io.hpp"

#include "rulebo/errors.hpp"
#include "rulebo/overloaded.hpp"

namespace rulebo {

json to_json(const Value& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

Value value_from_json(const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw InvalidInput("assignment value must be a number or a string");
}

json to_json(const Assignment& a) {
  json j = json::object();
  for (const auto& [k, v] : a) j[k] = to_json(v);
  return j;
}

Assignment assignment_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("assignment must be an object");
  Assignment a;
  for (const auto& [k, v] : j.items()) a.emplace(k, value_from_json(v));
  return a;
}

json to_json(const Domain& d) {
  json j;
  j["kind"] = std::string(kind_tag(d));
  std::visit(overloaded{
                 [&](const RealLinear& x) { j["min"] = x.min; j["max"] = x.max; },
                 [&](const RealLog& x) { j["min"] = x.min; j["max"] = x.max; },
                 [&](const IntegerRange& x) { j["min"] = x.min; j["max"] = x.max; },
                 [&](const Categorical& x) { j["labels"] = x.labels; },
             },
             d);
  return j;
}

Domain domain_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  Domain d;
  if (kind == "real") {
    d = RealLinear{j.at("min").get<double>(), j.at("max").get<double>()};
  } else if (kind == "real_log") {
    d = RealLog{j.at("min").get<double>(), j.at("max").get<double>()};
  } else if (kind == "int") {
    d = IntegerRange{j.at("min").get<std::int64_t>(), j.at("max").get<std::int64_t>()};
  } else if (kind == "cat") {
    d = Categorical{j.at("labels").get<std::vector<std::string>>()};
  } else {
    throw InvalidSpace("unknown domain kind '" + kind + "'");
  }
  validate_domain(d);
  return d;
}

json to_json(const Dimension& d) {
  json j = to_json(d.domain);
  j["name"] = d.name;
  if (d.role != Role::none) j["role"] = std::string(role_name(d.role));
  return j;
}

Dimension dimension_from_json(const json& j) {
  Dimension d;
  d.name = j.at("name").get<std::string>();
  d.domain = domain_from_json(j);
  d.role = j.contains("role") ? parse_role(j.at("role").get<std::string>()) : Role::none;
  return d;
}

json to_json(const SearchSpace& s) {
  json j = json::array();
  for (const auto& d : s.dimensions()) j.push_back(to_json(d));
  return j;
}

SearchSpace space_from_json(const json& j) {
  if (!j.is_array()) throw InvalidSpace("space must be an array of dimensions");
  std::vector<Dimension> dims;
  for (const auto& d : j) dims.push_back(dimension_from_json(d));
  return SearchSpace(std::move(dims));
}

json to_json(const History& h) {
  return {{"train_loss", h.train_loss}, {"val_loss", h.val_loss},
          {"train_acc", h.train_acc}, {"val_acc", h.val_acc}};
}

History history_from_json(const json& j) {
  History h;
  h.train_loss = j.at("train_loss").get<std::vector<double>>();
  h.val_loss = j.at("val_loss").get<std::vector<double>>();
  h.train_acc = j.at("train_acc").get<std::vector<double>>();
  h.val_acc = j.at("val_acc").get<std::vector<double>>();
  validate(h);
  return h;
}

json to_json(const EvalResult& r) {
  return {{"final_val_loss", r.final_val_loss}, {"final_val_acc", r.final_val_acc},
          {"objective", r.objective}};
}

EvalResult eval_result_from_json(const json& j) {
  return {j.at("final_val_loss").get<double>(), j.at("final_val_acc").get<double>(),
          j.at("objective").get<double>()};
}

json to_json(const ModelSpec& m) {
  json layers = json::array();
  for (const auto& l : m.layers) layers.push_back({{"kind", l.kind}, {"units", l.units_dimension}});
  json dirs = json::array();
  for (auto d : m.directives) dirs.push_back(std::string(directive_name(d)));
  return {{"layers", layers}, {"directives", dirs}};
}

ModelSpec model_spec_from_json(const json& j) {
  ModelSpec m;
  for (const auto& l : j.value("layers", json::array()))
    m.layers.push_back({l.at("kind").get<std::string>(), l.value("units", std::string())});
  for (const auto& d : j.value("directives", json::array()))
    m.directives.insert(parse_directive(d.get<std::string>()));
  return m;
}

json to_json(const DiagnosisReport& r) {
  json j = json::array();
  for (const auto& i : r) j.push_back({{"issue", std::string(issue_name(i.kind))}, {"score", i.score}});
  return j;
}

DiagnosisReport report_from_json(const json& j) {
  DiagnosisReport r;
  for (const auto& i : j) r.push_back({parse_issue(i.at("issue").get<std::string>()), i.at("score").get<double>()});
  return r;
}

json to_json(const Action& a) {
  return std::visit(
      overloaded{
          [](Directive d) -> json { return {{"type", "directive"}, {"directive", std::string(directive_name(d))}}; },
          [](const SpaceMutation& m) -> json {
            return std::visit(
                overloaded{
                    [](const RaiseLowerBound& r) -> json {
                      return {{"type", "raise_lower_bound"}, {"name", r.name}, {"value", r.new_min}};
                    },
                    [](const LowerUpperBound& l) -> json {
                      return {{"type", "lower_upper_bound"}, {"name", l.name}, {"value", l.new_max}};
                    },
                    [](const AddDimension& a) -> json {
                      return {{"type", "add_dimension"}, {"dimension", to_json(a.dimension)}};
                    },
                    [](const RemoveCategoricalMembers& r) -> json {
                      return {{"type", "remove_members"}, {"name", r.name}, {"labels", r.labels}};
                    },
                },
                m);
          },
      },
      a);
}

Action action_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "directive") return parse_directive(j.at("directive").get<std::string>());
  if (type == "raise_lower_bound")
    return SpaceMutation{RaiseLowerBound{j.at("name").get<std::string>(), j.at("value").get<double>()}};
  if (type == "lower_upper_bound")
    return SpaceMutation{LowerUpperBound{j.at("name").get<std::string>(), j.at("value").get<double>()}};
  if (type == "add_dimension") return SpaceMutation{AddDimension{dimension_from_json(j.at("dimension"))}};
  if (type == "remove_members")
    return SpaceMutation{RemoveCategoricalMembers{j.at("name").get<std::string>(),
                                                  j.at("labels").get<std::vector<std::string>>()}};
  throw InvalidInput("unknown action type '" + type + "'");
}

json to_json(const DiagnosisThresholds& t) {
  return {{"overfit_gap", t.overfit_gap},       {"underfit_loss", t.underfit_loss},
          {"underfit_acc", t.underfit_acc},     {"noise_score", t.noise_score},
          {"trend_min_rel_rise", t.trend_min_rel_rise}, {"tail_fraction", t.tail_fraction}};
}

DiagnosisThresholds thresholds_from_json(const json& j) {
  DiagnosisThresholds t;
  t.overfit_gap = j.value("overfit_gap", t.overfit_gap);
  t.underfit_loss = j.value("underfit_loss", t.underfit_loss);
  t.underfit_acc = j.value("underfit_acc", t.underfit_acc);
  t.noise_score = j.value("noise_score", t.noise_score);
  t.trend_min_rel_rise = j.value("trend_min_rel_rise", t.trend_min_rel_rise);
  t.tail_fraction = j.value("tail_fraction", t.tail_fraction);
  validate(t);
  return t;
}

json to_json(const AcquisitionConfig& c) {
  return {{"candidate_count", c.candidate_count}, {"refine_steps", c.refine_steps}, {"xi", c.xi}};
}

AcquisitionConfig acquisition_from_json(const json& j) {
  AcquisitionConfig c;
  c.candidate_count = j.value("candidate_count", c.candidate_count);
  c.refine_steps = j.value("refine_steps", c.refine_steps);
  c.xi = j.value("xi", c.xi);
  validate(c);
  return c;
}

json to_json(const FitConfig& c) {
  return {{"starts", c.starts},         {"max_iterations", c.max_iterations},
          {"max_sweeps", c.max_sweeps}, {"sweep_tolerance", c.sweep_tolerance},
          {"length_min", c.length_min}, {"length_max", c.length_max},
          {"signal_min", c.signal_min}, {"signal_max", c.signal_max},
          {"noise_min", c.noise_min},   {"noise_max", c.noise_max}};
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig c;
  c.starts = j.value("starts", c.starts);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.max_sweeps = j.value("max_sweeps", c.max_sweeps);
  c.sweep_tolerance = j.value("sweep_tolerance", c.sweep_tolerance);
  c.length_min = j.value("length_min", c.length_min);
  c.length_max = j.value("length_max", c.length_max);
  c.signal_min = j.value("signal_min", c.signal_min);
  c.signal_max = j.value("signal_max", c.signal_max);
  c.noise_min = j.value("noise_min", c.noise_min);
  c.noise_max = j.value("noise_max", c.noise_max);
  for (double v : {c.length_min, c.signal_min, c.noise_min})
    if (!(v > 0.0)) throw InvalidInput("GP search bounds must be positive");
  if (c.length_min > c.length_max || c.signal_min > c.signal_max || c.noise_min > c.noise_max)
    throw InvalidInput("GP search bounds must satisfy min <= max");
  return c;
}

json to_json(const RuleTable& t) {
  json j = json::object();
  for (const auto& [issue, templates] : t) {
    json list = json::array();
    for (const auto& tpl : templates) {
      json e;
      switch (tpl.kind) {
        case ActionTemplate::Kind::directive:
          e["kind"] = "directive";
          e["directive"] = std::string(directive_name(tpl.directive));
          if (tpl.add_dimension) e["add_dimension"] = to_json(*tpl.add_dimension);
          break;
        case ActionTemplate::Kind::raise_to_midpoint:
          e["kind"] = "raise_to_midpoint";
          e["role"] = std::string(role_name(tpl.role));
          break;
        case ActionTemplate::Kind::lower_to_midpoint:
          e["kind"] = "lower_to_midpoint";
          e["role"] = std::string(role_name(tpl.role));
          break;
      }
      list.push_back(e);
    }
    j[std::string(issue_name(issue))] = list;
  }
  return j;
}

RuleTable rule_table_from_json(const json& j) {
  RuleTable t = default_rule_table();
  for (const auto& [issue, list] : j.items()) {
    std::vector<ActionTemplate> templates;
    for (const auto& e : list) {
      ActionTemplate tpl;
      const auto kind = e.at("kind").get<std::string>();
      if (kind == "directive") {
        tpl.kind = ActionTemplate::Kind::directive;
        tpl.directive = parse_directive(e.at("directive").get<std::string>());
        if (e.contains("add_dimension")) tpl.add_dimension = dimension_from_json(e.at("add_dimension"));
      } else if (kind == "raise_to_midpoint" || kind == "lower_to_midpoint") {
        tpl.kind = kind == "raise_to_midpoint" ? ActionTemplate::Kind::raise_to_midpoint
                                               : ActionTemplate::Kind::lower_to_midpoint;
        tpl.role = parse_role(e.at("role").get<std::string>());
      } else {
        throw InvalidInput("unsupported rule action kind '" + kind + "'");
      }
      templates.push_back(std::move(tpl));
    }
    t[parse_issue(issue)] = std::move(templates);
  }
  validate(t);
  return t;
}

}  // namespace rulebo
