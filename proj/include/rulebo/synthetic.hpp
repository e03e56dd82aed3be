#pragma once

#include <nlohmann/json.hpp>

#include "rulebo/trainee.hpp"

namespace rulebo {

/// Coefficients of the phenomenological curve model. Defaults were chosen
/// with the calibration harness in tests/unit/test_synthetic.cpp so each
/// pathology trips its detector at default thresholds on the bundled
/// example space (configs/synthetic_tuner.json).
struct SyntheticConstants {
  double loss_scale = 2.3;          // loss of an untrained 10-class model
  double base_floor = 0.08;         // asymptotic loss fraction with enough units
  double lr_critical = 0.03;        // above this the loss diverges
  double tau_min = 2.5;             // epochs, at lr == lr_critical
  double tau_exponent = 0.5;
  double divergence_slope = 0.06;   // loss/epoch per unit of (lr - lr*) / lr*
  double creep = 0.01;              // residual loss/epoch still being shed
  double oscillation_coef = 0.8;    // noise amplitude = coef / batch_size
  double capacity_need = 450.0;     // total units the task needs
  double underfit_coef = 1.6;
  double gap_coef = 0.6;
  double l2_gap_factor = 0.2;
  double bn_tau_factor = 0.8;
  double chance_acc = 0.1;
};

SyntheticConstants synthetic_constants_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticConstants& c);

/// Deterministic stand-in trainee: curve shape depends on learning rate,
/// batch size, total units, dropout and the active directives.
TrainOutcome synthetic_curves(const TrainRequest& req, const RoleBindings& roles,
                              const SyntheticConstants& constants = {});

class SyntheticTrainee : public Trainee {
 public:
  SyntheticTrainee(RoleBindings roles, SyntheticConstants constants = {})
      : roles_(std::move(roles)), constants_(constants) {}
  std::string name() const override { return "synthetic"; }
  TrainOutcome train(const TrainRequest& req) override {
    return synthetic_curves(req, roles_, constants_);
  }

 private:
  RoleBindings roles_;
  SyntheticConstants constants_;
};

}  // namespace rulebo
