#include "rulebo/rules.hpp"

#include "rulebo/errors.hpp"
#include "rulebo/overloaded.hpp"

namespace rulebo {

std::string_view directive_name(Directive d) {
  switch (d) {
    case Directive::l2_regularization: return "l2_regularization";
    case Directive::batch_normalization: return "batch_normalization";
  }
  return "";
}

Directive parse_directive(std::string_view name) {
  for (auto d : {Directive::l2_regularization, Directive::batch_normalization})
    if (directive_name(d) == name) return d;
  throw InvalidInput("unknown directive '" + std::string(name) + "'");
}

std::string describe(const Action& action) {
  return std::visit(overloaded{
                        [](const SpaceMutation& m) { return describe(m); },
                        [](Directive d) { return "directive(" + std::string(directive_name(d)) + ")"; },
                    },
                    action);
}

void validate(const RuleTable& table) {
  for (auto k : {IssueKind::overfitting, IssueKind::underfitting,
                 IssueKind::increasing_loss_trend, IssueKind::fluctuating_loss})
    if (!table.contains(k)) throw InvalidInput("rule table lacks an entry for " + std::string(issue_name(k)));
}

Dimension default_l2_dimension() {
  return Dimension{"l2_lambda", RealLog{1e-6, 1e-1}, Role::l2_coefficient};
}

RuleTable default_rule_table() {
  using K = ActionTemplate::Kind;
  RuleTable t;
  t[IssueKind::overfitting] = {
      {K::directive, Directive::l2_regularization, Role::none, default_l2_dimension()},
      {K::directive, Directive::batch_normalization, Role::none, std::nullopt},
  };
  t[IssueKind::underfitting] = {{K::raise_to_midpoint, {}, Role::unit_count, std::nullopt}};
  t[IssueKind::fluctuating_loss] = {{K::raise_to_midpoint, {}, Role::batch_size, std::nullopt}};
  t[IssueKind::increasing_loss_trend] = {{K::lower_to_midpoint, {}, Role::learning_rate, std::nullopt}};
  return t;
}

TuneResult tune(const DiagnosisReport& issues, const ModelSpec& model,
                const SearchSpace& space, const RuleTable& table) {
  TuneResult out{model, space, {}, {}};
  for (const auto& issue : issues) {
    auto it = table.find(issue.kind);
    if (it == table.end()) {
      out.skipped.push_back(std::string(issue_name(issue.kind)) + ": no rule table entry");
      continue;
    }
    // Stage the whole issue so a binding failure leaves no partial edits.
    ModelSpec m = out.model;
    SearchSpace s = out.space;
    std::vector<AppliedAction> applied;
    try {
      for (const auto& tpl : it->second) {
        switch (tpl.kind) {
          case ActionTemplate::Kind::directive: {
            m.directives.insert(tpl.directive);
            applied.push_back({issue.kind, tpl.directive});
            if (tpl.add_dimension && !s.find(tpl.add_dimension->name)) {
              SpaceMutation mut = AddDimension{*tpl.add_dimension};
              s = apply_mutation(s, mut);
              applied.push_back({issue.kind, mut});
            }
            break;
          }
          case ActionTemplate::Kind::raise_to_midpoint:
          case ActionTemplate::Kind::lower_to_midpoint: {
            const auto names = s.names_with_role(tpl.role);
            if (names.empty())
              throw RuleBindingError("no dimension tagged '" + std::string(role_name(tpl.role)) + "'");
            for (const auto& name : names) {
              const double mid = domain_midpoint(s.find(name)->domain);
              SpaceMutation mut = tpl.kind == ActionTemplate::Kind::raise_to_midpoint
                                      ? SpaceMutation{RaiseLowerBound{name, mid}}
                                      : SpaceMutation{LowerUpperBound{name, mid}};
              s = apply_mutation(s, mut);
              applied.push_back({issue.kind, mut});
            }
            break;
          }
        }
      }
    } catch (const RuleBindingError& e) {
      out.skipped.push_back(std::string(issue_name(issue.kind)) + ": " + e.what());
      continue;
    } catch (const InvalidInput& e) {
      out.skipped.push_back(std::string(issue_name(issue.kind)) + ": " + e.what());
      continue;
    }
    out.model = std::move(m);
    out.space = std::move(s);
    out.applied.insert(out.applied.end(), applied.begin(), applied.end());
  }
  return out;
}

}  // namespace rulebo
