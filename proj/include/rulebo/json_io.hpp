#pragma once

#include <nlohmann/json.hpp>

#include "rulebo/acquisition.hpp"
#include "rulebo/diagnosis.hpp"
#include "rulebo/rules.hpp"
#include "rulebo/space.hpp"
#include "rulebo/surrogate.hpp"

namespace rulebo {

using json = nlohmann::json;

json to_json(const Value& v);
Value value_from_json(const json& j);

json to_json(const Assignment& a);
Assignment assignment_from_json(const json& j);

json to_json(const Domain& d);
Domain domain_from_json(const json& j);

json to_json(const Dimension& d);
Dimension dimension_from_json(const json& j);

json to_json(const SearchSpace& s);
SearchSpace space_from_json(const json& j);

json to_json(const History& h);
History history_from_json(const json& j);

json to_json(const EvalResult& r);
EvalResult eval_result_from_json(const json& j);

json to_json(const ModelSpec& m);
ModelSpec model_spec_from_json(const json& j);

json to_json(const DiagnosisReport& r);
DiagnosisReport report_from_json(const json& j);

json to_json(const Action& a);
Action action_from_json(const json& j);

json to_json(const DiagnosisThresholds& t);
DiagnosisThresholds thresholds_from_json(const json& j);

json to_json(const AcquisitionConfig& c);
AcquisitionConfig acquisition_from_json(const json& j);

json to_json(const FitConfig& c);
FitConfig fit_config_from_json(const json& j);

/// Rule override file: issue name -> list of templates. Only the built-in
/// template kinds ("directive", "raise_to_midpoint", "lower_to_midpoint")
/// are accepted.
json to_json(const RuleTable& t);
RuleTable rule_table_from_json(const json& j);

}  // namespace rulebo
