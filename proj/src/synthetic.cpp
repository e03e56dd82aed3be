#include "rulebo/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "rulebo/random.hpp"

namespace rulebo {

#define RULEBO_SYNTH_FIELDS(X)                                                           \
  X(loss_scale) X(base_floor) X(lr_critical) X(tau_min) X(tau_exponent)                  \
  X(divergence_slope) X(creep) X(oscillation_coef) X(capacity_need) X(underfit_coef)     \
  X(gap_coef) X(l2_gap_factor) X(bn_tau_factor) X(chance_acc)

SyntheticConstants synthetic_constants_from_json(const nlohmann::json& j) {
  SyntheticConstants c;
#define X(f) c.f = j.value(#f, c.f);
  RULEBO_SYNTH_FIELDS(X)
#undef X
  return c;
}

nlohmann::json to_json(const SyntheticConstants& c) {
  nlohmann::json j;
#define X(f) j[#f] = c.f;
  RULEBO_SYNTH_FIELDS(X)
#undef X
  return j;
}

#undef RULEBO_SYNTH_FIELDS

TrainOutcome synthetic_curves(const TrainRequest& req, const RoleBindings& roles,
                              const SyntheticConstants& k) {
  if (req.epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (roles.units.empty()) throw RuleBindingError("synthetic trainee needs a unit_count dimension");
  if (roles.dropout.empty()) throw RuleBindingError("synthetic trainee needs a dropout_rate dimension");

  const double lr = require_number(req.assignment, roles.learning_rate);
  const double batch = std::max(1.0, require_number(req.assignment, roles.batch_size));
  double units = 0.0;
  for (const auto& u : roles.units) units += require_number(req.assignment, u);
  double dropout = 0.0;
  for (const auto& d : roles.dropout) dropout += require_number(req.assignment, d);
  dropout /= static_cast<double>(roles.dropout.size());

  const auto has = [&](Directive d) {
    return std::find(req.directives.begin(), req.directives.end(), directive_name(d)) != req.directives.end();
  };
  const bool l2 = has(Directive::l2_regularization);
  const bool bn = has(Directive::batch_normalization);

  const double lr_eff = std::min(lr, k.lr_critical);
  const double tau = k.tau_min * std::pow(k.lr_critical / lr_eff, k.tau_exponent) * (bn ? k.bn_tau_factor : 1.0);
  const double deficit = std::max(0.0, k.capacity_need - units) / k.capacity_need;
  const double floor = std::min(0.9, k.base_floor + k.underfit_coef * deficit);
  const double excess = std::max(0.0, units - k.capacity_need) / k.capacity_need;
  const double gap_target =
      std::min(0.9, k.gap_coef * excess * (1.0 - dropout) * (l2 ? k.l2_gap_factor : 1.0));
  const double divergence = lr > k.lr_critical ? k.divergence_slope * (lr - k.lr_critical) / k.lr_critical : 0.0;
  const double amplitude = k.oscillation_coef / batch;

  auto accuracy = [&](double loss) {
    return k.chance_acc + (1.0 - k.chance_acc) * std::clamp(1.0 - loss / k.loss_scale, 0.0, 1.0);
  };

  Rng noise(req.seed ^ 0x9e3779b97f4a7c15ULL);
  const int E = req.epochs;
  TrainOutcome out;
  for (int e = 0; e < E; ++e) {
    const double t = static_cast<double>(e + 1);
    const double smooth = k.loss_scale * (floor + (1.0 - floor) * std::exp(-t / tau)) +
                          k.creep * static_cast<double>(E - 1 - e) + divergence * static_cast<double>(e);
    const double gap = gap_target * (1.0 - std::exp(-t / tau));
    const double val_clean = std::clamp(smooth + amplitude * (2.0 * noise.uniform() - 1.0), 0.0, 50.0);
    const double train_clean = std::clamp(smooth + 0.5 * amplitude * (2.0 * noise.uniform() - 1.0), 0.0, 50.0);
    const double val_loss = val_clean * (1.0 + gap);
    const double train_loss = train_clean * (1.0 - 0.5 * gap);
    const double val_acc = std::clamp(accuracy(val_clean) - 0.5 * gap, 0.0, 1.0);
    const double train_acc = std::clamp(accuracy(train_clean) + 0.5 * gap, 0.0, 1.0);
    out.history.push(train_loss, val_loss, train_acc, val_acc);
  }
  out.result.final_val_loss = out.history.val_loss.back();
  out.result.final_val_acc = out.history.val_acc.back();
  out.result.objective = out.result.final_val_loss;
  return out;
}

}  // namespace rulebo
