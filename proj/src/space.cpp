#include "rulebo/space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "rulebo/errors.hpp"
#include "rulebo/overloaded.hpp"

namespace rulebo {

namespace {

double clamp01(double u) { return std::clamp(u, 0.0, 1.0); }

bool is_finite_in(double v, double lo, double hi) {
  return std::isfinite(v) && v >= lo && v <= hi;
}

}  // namespace

std::string_view kind_tag(const Domain& domain) {
  return std::visit(overloaded{
                        [](const RealLinear&) { return std::string_view("real"); },
                        [](const RealLog&) { return std::string_view("real_log"); },
                        [](const IntegerRange&) { return std::string_view("int"); },
                        [](const Categorical&) { return std::string_view("cat"); },
                    },
                    domain);
}

void validate_domain(const Domain& domain) {
  std::visit(
      overloaded{
          [](const RealLinear& d) {
            if (!std::isfinite(d.min) || !std::isfinite(d.max) || !(d.min < d.max))
              throw InvalidSpace("real domain requires finite min < max");
          },
          [](const RealLog& d) {
            if (!std::isfinite(d.min) || !std::isfinite(d.max) || !(d.min < d.max))
              throw InvalidSpace("real_log domain requires finite min < max");
            if (!(d.min > 0.0)) throw InvalidSpace("real_log domain requires min > 0");
          },
          [](const IntegerRange& d) {
            if (d.min > d.max) throw InvalidSpace("int domain requires min <= max");
          },
          [](const Categorical& d) {
            if (d.labels.empty())
              throw InvalidSpace("categorical domain requires at least one label");
            std::set<std::string> seen(d.labels.begin(), d.labels.end());
            if (seen.size() != d.labels.size())
              throw InvalidSpace("categorical labels must be distinct");
          },
      },
      domain);
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::none: return "none";
    case Role::unit_count: return "unit_count";
    case Role::batch_size: return "batch_size";
    case Role::learning_rate: return "learning_rate";
    case Role::dropout_rate: return "dropout_rate";
    case Role::l2_coefficient: return "l2_coefficient";
  }
  return "none";
}

Role parse_role(std::string_view name) {
  for (Role r : {Role::none, Role::unit_count, Role::batch_size,
                 Role::learning_rate, Role::dropout_rate,
                 Role::l2_coefficient}) {
    if (role_name(r) == name) return r;
  }
  throw InvalidSpace("unknown dimension role '" + std::string(name) + "'");
}

double as_double(const Value& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&value)) return *d;
  throw InvalidInput("categorical label has no numeric value");
}

std::string format_value(const Value& value) {
  return std::visit(overloaded{
                        [](std::int64_t v) { return std::to_string(v); },
                        [](double v) {
                          char buf[64];
                          auto res = std::to_chars(buf, buf + sizeof(buf), v);
                          return std::string(buf, res.ptr);
                        },
                        [](const std::string& v) { return v; },
                    },
                    value);
}

bool domain_contains(const Domain& domain, const Value& value) {
  return std::visit(
      overloaded{
          [&](const RealLinear& d) {
            const auto* v = std::get_if<double>(&value);
            return v && is_finite_in(*v, d.min, d.max);
          },
          [&](const RealLog& d) {
            const auto* v = std::get_if<double>(&value);
            return v && is_finite_in(*v, d.min, d.max);
          },
          [&](const IntegerRange& d) {
            const auto* v = std::get_if<std::int64_t>(&value);
            return v && *v >= d.min && *v <= d.max;
          },
          [&](const Categorical& d) {
            const auto* v = std::get_if<std::string>(&value);
            return v && std::find(d.labels.begin(), d.labels.end(), *v) != d.labels.end();
          },
      },
      domain);
}

bool domain_subset(const Domain& inner, const Domain& outer) {
  if (inner.index() != outer.index()) return false;
  return std::visit(
      overloaded{
          [&](const RealLinear& d) {
            const auto& o = std::get<RealLinear>(outer);
            return d.min >= o.min && d.max <= o.max;
          },
          [&](const RealLog& d) {
            const auto& o = std::get<RealLog>(outer);
            return d.min >= o.min && d.max <= o.max;
          },
          [&](const IntegerRange& d) {
            const auto& o = std::get<IntegerRange>(outer);
            return d.min >= o.min && d.max <= o.max;
          },
          [&](const Categorical& d) {
            const auto& o = std::get<Categorical>(outer);
            return std::all_of(d.labels.begin(), d.labels.end(), [&](const std::string& l) {
              return std::find(o.labels.begin(), o.labels.end(), l) != o.labels.end();
            });
          },
      },
      inner);
}

SearchSpace::SearchSpace(std::vector<Dimension> dimensions) : dims_(std::move(dimensions)) {
  std::set<std::string> names;
  for (const auto& dim : dims_) {
    if (dim.name.empty()) throw InvalidSpace("dimension name must be non-empty");
    if (!names.insert(dim.name).second) throw DuplicateDimension("duplicate dimension '" + dim.name + "'");
    validate_domain(dim.domain);
  }
}

const Dimension* SearchSpace::find(std::string_view name) const {
  for (const auto& dim : dims_)
    if (dim.name == name) return &dim;
  return nullptr;
}

std::optional<std::size_t> SearchSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i)
    if (dims_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::string> SearchSpace::names_with_role(Role role) const {
  std::vector<std::string> out;
  for (const auto& dim : dims_)
    if (dim.role == role) out.push_back(dim.name);
  return out;
}

Assignment sample_random(const SearchSpace& space, Rng& rng) {
  if (space.empty()) throw InvalidSpace("cannot sample from an empty space");
  Assignment a;
  for (const auto& dim : space.dimensions()) {
    Value v = std::visit(
        overloaded{
            [&](const RealLinear& d) -> Value {
              return std::clamp(rng.uniform(d.min, d.max), d.min, d.max);
            },
            [&](const RealLog& d) -> Value {
              const double e = rng.uniform(std::log10(d.min), std::log10(d.max));
              return std::clamp(std::pow(10.0, e), d.min, d.max);
            },
            [&](const IntegerRange& d) -> Value {
              const auto width = static_cast<std::uint64_t>(d.max - d.min) + 1;
              return d.min + static_cast<std::int64_t>(rng.below(width));
            },
            [&](const Categorical& d) -> Value {
              return d.labels[rng.below(d.labels.size())];
            },
        },
        dim.domain);
    a.emplace(dim.name, std::move(v));
  }
  return a;
}

bool contains(const SearchSpace& space, const Assignment& a) {
  if (a.size() != space.size()) return false;
  for (const auto& dim : space.dimensions()) {
    auto it = a.find(dim.name);
    if (it == a.end() || !domain_contains(dim.domain, it->second)) return false;
  }
  return true;
}

double encode_value(const Domain& domain, const Value& value) {
  if (!domain_contains(domain, value)) throw OutOfDomain("value " + format_value(value) + " outside domain");
  return std::visit(
      overloaded{
          [&](const RealLinear& d) {
            return clamp01((std::get<double>(value) - d.min) / (d.max - d.min));
          },
          [&](const RealLog& d) {
            const double lo = std::log10(d.min), hi = std::log10(d.max);
            return clamp01((std::log10(std::get<double>(value)) - lo) / (hi - lo));
          },
          [&](const IntegerRange& d) {
            if (d.min == d.max) return 0.5;
            return static_cast<double>(std::get<std::int64_t>(value) - d.min) /
                   static_cast<double>(d.max - d.min);
          },
          [&](const Categorical& d) {
            const auto& label = std::get<std::string>(value);
            const auto idx = std::find(d.labels.begin(), d.labels.end(), label) - d.labels.begin();
            return (static_cast<double>(idx) + 0.5) / static_cast<double>(d.labels.size());
          },
      },
      domain);
}

Value decode_value(const Domain& domain, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw OutOfDomain("encoded coordinate outside [0,1]");
  return std::visit(
      overloaded{
          [&](const RealLinear& d) -> Value {
            return std::clamp(d.min + u * (d.max - d.min), d.min, d.max);
          },
          [&](const RealLog& d) -> Value {
            const double lo = std::log10(d.min), hi = std::log10(d.max);
            if (u == 0.0) return d.min;
            if (u == 1.0) return d.max;
            return std::clamp(std::pow(10.0, lo + u * (hi - lo)), d.min, d.max);
          },
          [&](const IntegerRange& d) -> Value {
            const double span = static_cast<double>(d.max - d.min);
            const auto v = d.min + static_cast<std::int64_t>(std::llround(u * span));
            return std::clamp(v, d.min, d.max);
          },
          [&](const Categorical& d) -> Value {
            const auto k = d.labels.size();
            const auto idx = std::min(static_cast<std::size_t>(u * static_cast<double>(k)), k - 1);
            return d.labels[idx];
          },
      },
      domain);
}

std::vector<double> encode(const SearchSpace& space, const Assignment& a) {
  if (a.size() != space.size()) throw OutOfDomain("assignment is not complete for the space");
  std::vector<double> u;
  u.reserve(space.size());
  for (const auto& dim : space.dimensions()) {
    auto it = a.find(dim.name);
    if (it == a.end()) throw OutOfDomain("assignment lacks dimension '" + dim.name + "'");
    u.push_back(encode_value(dim.domain, it->second));
  }
  return u;
}

Assignment decode(const SearchSpace& space, std::span<const double> u) {
  if (u.size() != space.size()) throw DimensionMismatch("point dimension does not match the space");
  Assignment a;
  for (std::size_t i = 0; i < space.size(); ++i) {
    a.emplace(space[i].name, decode_value(space[i].domain, u[i]));
  }
  return a;
}

double domain_midpoint(const Domain& domain) {
  return std::visit(overloaded{
                        [](const RealLinear& d) { return 0.5 * (d.min + d.max); },
                        [](const RealLog& d) { return std::sqrt(d.min * d.max); },
                        [](const IntegerRange& d) {
                          return std::floor(0.5 * static_cast<double>(d.min + d.max));
                        },
                        [](const Categorical&) -> double {
                          throw InvalidInput("categorical domain has no midpoint");
                        },
                    },
                    domain);
}

namespace {

Domain raise_lower(const Domain& domain, double new_min) {
  return std::visit(
      overloaded{
          [&](const RealLinear& d) -> Domain {
            if (new_min <= d.min) return d;
            if (new_min >= d.max) new_min = d.max - 0.25 * (d.max - d.min);
            return RealLinear{new_min, d.max};
          },
          [&](const RealLog& d) -> Domain {
            if (new_min <= d.min) return d;
            if (new_min >= d.max) new_min = d.max / std::pow(d.max / d.min, 0.25);
            return RealLog{new_min, d.max};
          },
          [&](const IntegerRange& d) -> Domain {
            const double c = std::ceil(new_min);
            if (c <= static_cast<double>(d.min)) return d;
            std::int64_t m = c >= static_cast<double>(d.max) ? d.max : static_cast<std::int64_t>(c);
            if (m >= d.max) m = d.max - std::max<std::int64_t>(1, (d.max - d.min) / 4);
            return IntegerRange{std::max(m, d.min), d.max};
          },
          [&](const Categorical&) -> Domain {
            throw InvalidInput("bound change on a categorical dimension");
          },
      },
      domain);
}

Domain lower_upper(const Domain& domain, double new_max) {
  return std::visit(
      overloaded{
          [&](const RealLinear& d) -> Domain {
            if (new_max >= d.max) return d;
            if (new_max <= d.min) new_max = d.min + 0.25 * (d.max - d.min);
            return RealLinear{d.min, new_max};
          },
          [&](const RealLog& d) -> Domain {
            if (new_max >= d.max) return d;
            if (new_max <= d.min) new_max = d.min * std::pow(d.max / d.min, 0.25);
            return RealLog{d.min, new_max};
          },
          [&](const IntegerRange& d) -> Domain {
            const double f = std::floor(new_max);
            if (f >= static_cast<double>(d.max)) return d;
            std::int64_t m = f <= static_cast<double>(d.min) ? d.min : static_cast<std::int64_t>(f);
            if (m <= d.min) m = d.min + std::max<std::int64_t>(1, (d.max - d.min) / 4);
            return IntegerRange{d.min, std::min(m, d.max)};
          },
          [&](const Categorical&) -> Domain {
            throw InvalidInput("bound change on a categorical dimension");
          },
      },
      domain);
}

}  // namespace

SearchSpace apply_mutation(const SearchSpace& space, const SpaceMutation& m) {
  std::vector<Dimension> dims = space.dimensions();
  auto target = [&](const std::string& name) -> Dimension& {
    for (auto& d : dims)
      if (d.name == name) return d;
    throw UnknownDimension("unknown dimension '" + name + "'");
  };

  std::visit(overloaded{
                 [&](const RaiseLowerBound& r) {
                   auto& d = target(r.name);
                   d.domain = raise_lower(d.domain, r.new_min);
                 },
                 [&](const LowerUpperBound& l) {
                   auto& d = target(l.name);
                   d.domain = lower_upper(d.domain, l.new_max);
                 },
                 [&](const AddDimension& add) {
                   if (space.find(add.dimension.name))
                     throw DuplicateDimension("dimension '" + add.dimension.name + "' already exists");
                   dims.push_back(add.dimension);
                 },
                 [&](const RemoveCategoricalMembers& rm) {
                   auto& d = target(rm.name);
                   auto* cat = std::get_if<Categorical>(&d.domain);
                   if (!cat) throw InvalidInput("'" + rm.name + "' is not categorical");
                   std::vector<std::string> kept;
                   for (const auto& l : cat->labels)
                     if (std::find(rm.labels.begin(), rm.labels.end(), l) == rm.labels.end())
                       kept.push_back(l);
                   if (kept.empty()) kept.push_back(cat->labels.front());
                   cat->labels = std::move(kept);
                 },
             },
             m);
  return SearchSpace(std::move(dims));
}

std::string describe(const SpaceMutation& m) {
  return std::visit(
      overloaded{
          [](const RaiseLowerBound& r) {
            return "raise_lower_bound(" + r.name + "," + format_value(r.new_min) + ")";
          },
          [](const LowerUpperBound& l) {
            return "lower_upper_bound(" + l.name + "," + format_value(l.new_max) + ")";
          },
          [](const AddDimension& a) {
            return "add_dimension(" + a.dimension.name + "," + std::string(kind_tag(a.dimension.domain)) + ")";
          },
          [](const RemoveCategoricalMembers& r) {
            std::string s = "remove_members(" + r.name;
            for (const auto& l : r.labels) s += "," + l;
            return s + ")";
          },
      },
      m);
}

}  // namespace rulebo
