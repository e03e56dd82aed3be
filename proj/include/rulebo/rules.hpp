#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rulebo/diagnosis.hpp"
#include "rulebo/space.hpp"

namespace rulebo {

enum class Directive { l2_regularization, batch_normalization };

std::string_view directive_name(Directive d);
Directive parse_directive(std::string_view name);

/// One layer of the abstract trainee model; `units_dimension` names the
/// search dimension that sizes it (empty when the layer is fixed).
struct LayerSpec {
  std::string kind;
  std::string units_dimension;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelSpec {
  std::vector<LayerSpec> layers;
  std::set<Directive> directives;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

using Action = std::variant<SpaceMutation, Directive>;

std::string describe(const Action& action);

struct AppliedAction {
  IssueKind issue;
  Action action;
};

/// Rule template, resolved against the space at the moment it fires.
struct ActionTemplate {
  enum class Kind { directive, raise_to_midpoint, lower_to_midpoint };
  Kind kind = Kind::directive;
  Directive directive = Directive::l2_regularization;
  Role role = Role::none;
  /// Dimension added alongside a directive, skipped if already present.
  std::optional<Dimension> add_dimension;
};

using RuleTable = std::map<IssueKind, std::vector<ActionTemplate>>;

/// Throws InvalidInput unless every issue kind has an entry.
void validate(const RuleTable& table);

Dimension default_l2_dimension();
RuleTable default_rule_table();

struct TuneResult {
  ModelSpec model;
  SearchSpace space;
  std::vector<AppliedAction> applied;
  /// One message per issue skipped because a rule could not bind.
  std::vector<std::string> skipped;
};

/// Applies the rules for each issue in report order. An issue whose rules
/// cannot bind to a role-tagged dimension is skipped as a whole.
TuneResult tune(const DiagnosisReport& issues, const ModelSpec& model,
                const SearchSpace& space, const RuleTable& table);

}  // namespace rulebo
