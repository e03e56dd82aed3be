#include "rulebo/trainee.hpp"

namespace rulebo {

std::vector<std::string> directive_names(const std::set<Directive>& directives) {
  std::vector<std::string> out;
  for (auto d : directives) out.emplace_back(directive_name(d));
  return out;
}

RoleBindings RoleBindings::from_space(const SearchSpace& space) {
  RoleBindings b;
  b.units = space.names_with_role(Role::unit_count);
  b.dropout = space.names_with_role(Role::dropout_rate);
  if (auto lr = space.names_with_role(Role::learning_rate); !lr.empty()) b.learning_rate = lr.front();
  if (auto bs = space.names_with_role(Role::batch_size); !bs.empty()) b.batch_size = bs.front();
  if (auto l2 = space.names_with_role(Role::l2_coefficient); !l2.empty()) b.l2 = l2.front();
  return b;
}

double require_number(const Assignment& a, const std::string& name) {
  auto it = a.find(name);
  if (name.empty() || it == a.end())
    throw RuleBindingError("request lacks the role-tagged dimension '" + name + "'");
  return as_double(it->second);
}

}  // namespace rulebo
