#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rulebo/random.hpp"

namespace rulebo {

struct RealLinear {
  double min = 0.0;
  double max = 1.0;
  friend bool operator==(const RealLinear&, const RealLinear&) = default;
};

/// Real interval sampled and encoded uniformly in log10. Requires min > 0.
struct RealLog {
  double min = 1.0;
  double max = 10.0;
  friend bool operator==(const RealLog&, const RealLog&) = default;
};

/// Closed integer interval; min == max is a legal singleton.
struct IntegerRange {
  std::int64_t min = 0;
  std::int64_t max = 1;
  friend bool operator==(const IntegerRange&, const IntegerRange&) = default;
};

struct Categorical {
  std::vector<std::string> labels;
  friend bool operator==(const Categorical&, const Categorical&) = default;
};

using Domain = std::variant<RealLinear, RealLog, IntegerRange, Categorical>;

/// Serialized kind tag: "real", "real_log", "int" or "cat".
std::string_view kind_tag(const Domain& domain);

/// Throws InvalidSpace when the domain breaks its invariants.
void validate_domain(const Domain& domain);

/// Semantic role of a dimension, used by tuning rules and built-in trainees
/// to find e.g. "the learning rate" without relying on names.
enum class Role {
  none,
  unit_count,
  batch_size,
  learning_rate,
  dropout_rate,
  l2_coefficient,
};

std::string_view role_name(Role role);
Role parse_role(std::string_view name);

using Value = std::variant<std::int64_t, double, std::string>;
using Assignment = std::map<std::string, Value>;

/// Numeric view of a value; throws InvalidInput for labels.
double as_double(const Value& value);
std::string format_value(const Value& value);

bool domain_contains(const Domain& domain, const Value& value);

/// True when every member of `inner` is a member of `outer`.
bool domain_subset(const Domain& inner, const Domain& outer);

struct Dimension {
  std::string name;
  Domain domain;
  Role role = Role::none;
  friend bool operator==(const Dimension&, const Dimension&) = default;
};

/// Ordered, immutable collection of uniquely named dimensions.
class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<Dimension> dimensions);

  std::size_t size() const noexcept { return dims_.size(); }
  bool empty() const noexcept { return dims_.empty(); }
  const std::vector<Dimension>& dimensions() const noexcept { return dims_; }
  const Dimension& operator[](std::size_t i) const { return dims_.at(i); }

  const Dimension* find(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names_with_role(Role role) const;

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;

 private:
  std::vector<Dimension> dims_;
};

Assignment sample_random(const SearchSpace& space, Rng& rng);

bool contains(const SearchSpace& space, const Assignment& a);

/// Maps an assignment into [0,1]^d. Throws OutOfDomain if !contains.
std::vector<double> encode(const SearchSpace& space, const Assignment& a);

/// Inverse of encode, snapping integers and labels to their grids.
Assignment decode(const SearchSpace& space, std::span<const double> u);

double encode_value(const Domain& domain, const Value& value);
Value decode_value(const Domain& domain, double u);

// Mutations applied by tuning rules.

struct RaiseLowerBound {
  std::string name;
  double new_min = 0.0;
  friend bool operator==(const RaiseLowerBound&,
                         const RaiseLowerBound&) = default;
};

struct LowerUpperBound {
  std::string name;
  double new_max = 0.0;
  friend bool operator==(const LowerUpperBound&,
                         const LowerUpperBound&) = default;
};

struct AddDimension {
  Dimension dimension;
  friend bool operator==(const AddDimension&, const AddDimension&) = default;
};

struct RemoveCategoricalMembers {
  std::string name;
  std::vector<std::string> labels;
  friend bool operator==(const RemoveCategoricalMembers&,
                         const RemoveCategoricalMembers&) = default;
};

using SpaceMutation = std::variant<RaiseLowerBound, LowerUpperBound,
                                   AddDimension, RemoveCategoricalMembers>;

/// Returns the mutated space. Bound changes never widen a domain. A bound
/// change that would leave min >= max is clamped so the top (for raises) or
/// bottom (for lowers) quarter of the current interval survives; removing
/// every label of a categorical keeps its first remaining label.
SearchSpace apply_mutation(const SearchSpace& space, const SpaceMutation& m);

std::string describe(const SpaceMutation& m);

/// Midpoint of an interval domain in its own geometry: arithmetic for
/// linear and integer domains (rounded down), geometric for log domains.
double domain_midpoint(const Domain& domain);

}  // namespace rulebo
