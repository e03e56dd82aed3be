#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rulebo/diagnosis.hpp"
#include "rulebo/errors.hpp"
#include "rulebo/rules.hpp"
#include "rulebo/space.hpp"

namespace rulebo {

struct TrainRequest {
  Assignment assignment;
  std::vector<std::string> directives;
  int epochs = 1;
  std::uint64_t seed = 0;
};

struct Capabilities {
  std::vector<std::string> directives;
  std::string name;
  int version = 1;
};

struct TrainOutcome {
  History history;
  EvalResult result;
  /// Free-form log lines (capability downgrades, clamped batch sizes).
  std::vector<std::string> notes;
};

/// Training aborted on a non-finite loss; carries the epochs completed.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, History partial)
      : Error(what), partial_(std::move(partial)) {}
  const History& partial() const noexcept { return partial_; }

 private:
  History partial_;
};

/// Anything that can turn a request into curves: a built-in learner, a
/// simulator, or an external process speaking wire protocol v1.
class Trainee {
 public:
  virtual ~Trainee() = default;
  virtual std::string name() const = 0;
  virtual TrainOutcome train(const TrainRequest& request) = 0;
};

std::vector<std::string> directive_names(const std::set<Directive>& directives);

/// Names of the role-tagged dimensions a built-in trainee reads.
struct RoleBindings {
  std::vector<std::string> units;
  std::vector<std::string> dropout;
  std::string learning_rate;
  std::string batch_size;
  std::string l2 = "l2_lambda";

  static RoleBindings from_space(const SearchSpace& space);
};

/// Numeric lookup in a request; throws RuleBindingError when missing.
double require_number(const Assignment& a, const std::string& name);

}  // namespace rulebo
