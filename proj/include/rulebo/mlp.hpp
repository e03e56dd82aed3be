#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "rulebo/dataset.hpp"
#include "rulebo/random.hpp"
#include "rulebo/trainee.hpp"

namespace rulebo {

/// Two-hidden-layer ReLU network with softmax output and optional batch
/// normalization before each hidden activation.
class Mlp {
 public:
  Mlp(int inputs, int hidden1, int hidden2, int classes, bool batch_norm, Rng& init);

  /// Parameters in a fixed order: W1 b1 g1 be1 W2 b2 g2 be2 W3 b3. With
  /// batch normalization the hidden biases are unused; without it the
  /// scale/shift pairs are unused.
  std::vector<Eigen::MatrixXd*> parameters();
  std::vector<const Eigen::MatrixXd*> parameters() const;

  struct Pass {
    double loss = 0.0;  // mean cross-entropy plus the L2 penalty
    double data_loss = 0.0;
    int correct = 0;
  };

  /// Training-mode forward/backward on one mini-batch. Dropout masks are
  /// drawn from `dropout_rng` when a rate is positive. `grads` (optional)
  /// receives gradients in parameters() order. Batch statistics update the
  /// running estimates only when `update_running` is set.
  Pass train_pass(const Eigen::MatrixXd& x, std::span<const int> y, double l2,
                  double dropout1, double dropout2, Rng* dropout_rng,
                  std::vector<Eigen::MatrixXd>* grads, bool update_running);

  /// Inference-mode evaluation (running statistics, no dropout).
  Pass evaluate(const Eigen::MatrixXd& x, std::span<const int> y) const;

  void sgd_step(const std::vector<Eigen::MatrixXd>& grads, double lr);

  bool batch_norm() const { return batch_norm_; }

  static constexpr double kBnMomentum = 0.9;
  static constexpr double kBnEpsilon = 1e-5;

 private:
  bool batch_norm_;
  Eigen::MatrixXd w1_, b1_, g1_, be1_, w2_, b2_, g2_, be2_, w3_, b3_;
  Eigen::RowVectorXd mean1_, var1_, mean2_, var2_;
};

struct MlpSettings {
  int hidden1 = 32;
  int hidden2 = 32;
  double learning_rate = 0.05;
  int batch_size = 32;
  double dropout1 = 0.0;
  double dropout2 = 0.0;
  bool batch_norm = false;
  bool l2 = false;
  double l2_lambda = 0.0;
};

struct MlpRun {
  TrainOutcome outcome;
  Mlp model;
};

/// Mini-batch SGD on the training split; one history record per epoch.
/// Throws TrainingDiverged (with the completed epochs) on a non-finite loss.
MlpRun train_mlp(const MlpSettings& settings, const Dataset& data, int epochs, std::uint64_t seed);

/// Reads the settings from a request through the role bindings.
MlpSettings mlp_settings_from_request(const TrainRequest& req, const RoleBindings& roles);

TrainOutcome mlp_train(const TrainRequest& req, const Dataset& data, const RoleBindings& roles);

class MlpTrainee : public Trainee {
 public:
  MlpTrainee(Dataset data, RoleBindings roles) : data_(std::move(data)), roles_(std::move(roles)) {}
  std::string name() const override { return "mlp"; }
  TrainOutcome train(const TrainRequest& req) override { return mlp_train(req, data_, roles_); }

 private:
  Dataset data_;
  RoleBindings roles_;
};

}  // namespace rulebo
