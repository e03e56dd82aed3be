#include "rulebo/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace rulebo {

namespace {

Eigen::MatrixXd he_init(int fan_in, int fan_out, Rng& rng) {
  Eigen::MatrixXd w(fan_in, fan_out);
  const double s = std::sqrt(2.0 / fan_in);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = s * rng.normal();
  return w;
}

struct HiddenCache {
  Eigen::MatrixXd input;
  Eigen::MatrixXd normalized;  // batch-norm output before scale/shift
  Eigen::MatrixXd pre;         // pre-activation fed to ReLU
  Eigen::MatrixXd mask;        // dropout mask including the 1/(1-p) scale
  Eigen::RowVectorXd inv_std;
  Eigen::MatrixXd out;
};

struct HiddenParams {
  const Eigen::MatrixXd& w;
  const Eigen::MatrixXd& b;
  const Eigen::MatrixXd& g;
  const Eigen::MatrixXd& be;
};

void hidden_forward(const Eigen::MatrixXd& x, const HiddenParams& p, bool bn, double dropout,
                    Rng* rng, HiddenCache& c, Eigen::RowVectorXd* run_mean, Eigen::RowVectorXd* run_var) {
  c.input = x;
  Eigen::MatrixXd z = x * p.w;
  const auto n = static_cast<double>(x.rows());
  if (bn) {
    const Eigen::RowVectorXd mean = z.colwise().mean();
    z.rowwise() -= mean;
    const Eigen::RowVectorXd var = z.array().square().colwise().sum() / n;
    c.inv_std = (var.array() + Mlp::kBnEpsilon).rsqrt();
    c.normalized = z.array().rowwise() * c.inv_std.array();
    c.pre = (c.normalized.array().rowwise() * p.g.row(0).array()).rowwise() + p.be.row(0).array();
    if (run_mean) {
      *run_mean = Mlp::kBnMomentum * *run_mean + (1.0 - Mlp::kBnMomentum) * mean;
      *run_var = Mlp::kBnMomentum * *run_var + (1.0 - Mlp::kBnMomentum) * var;
    }
  } else {
    c.pre = z.rowwise() + p.b.row(0);
  }
  Eigen::MatrixXd a = c.pre.cwiseMax(0.0);
  c.mask = Eigen::MatrixXd::Ones(a.rows(), a.cols());
  if (dropout > 0.0 && rng) {
    const double keep = 1.0 - dropout;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) c.mask(i, j) = rng->uniform() < keep ? 1.0 / keep : 0.0;
  }
  c.out = a.cwiseProduct(c.mask);
}

/// Returns d(loss)/d(input); writes dW, db, dg, dbe.
Eigen::MatrixXd hidden_backward(const Eigen::MatrixXd& d_out, const HiddenParams& p, bool bn, double l2,
                                const HiddenCache& c, Eigen::MatrixXd& dw, Eigen::MatrixXd& db,
                                Eigen::MatrixXd& dg, Eigen::MatrixXd& dbe) {
  const Eigen::MatrixXd d_pre =
      d_out.cwiseProduct(c.mask).cwiseProduct((c.pre.array() > 0.0).cast<double>().matrix());
  Eigen::MatrixXd dz;
  db = Eigen::MatrixXd::Zero(1, p.w.cols());
  dg = Eigen::MatrixXd::Zero(1, p.w.cols());
  dbe = Eigen::MatrixXd::Zero(1, p.w.cols());
  if (bn) {
    const double n = static_cast<double>(d_pre.rows());
    dg.row(0) = d_pre.cwiseProduct(c.normalized).colwise().sum();
    dbe.row(0) = d_pre.colwise().sum();
    const Eigen::MatrixXd dh = d_pre.array().rowwise() * p.g.row(0).array();
    const Eigen::RowVectorXd sum_dh = dh.colwise().sum();
    const Eigen::RowVectorXd sum_dh_h = dh.cwiseProduct(c.normalized).colwise().sum();
    Eigen::MatrixXd t = n * dh;
    t.rowwise() -= sum_dh;
    t -= (c.normalized.array().rowwise() * sum_dh_h.array()).matrix();
    dz = (t.array().rowwise() * (c.inv_std.array() / n)).matrix();
  } else {
    db.row(0) = d_pre.colwise().sum();
    dz = d_pre;
  }
  dw = c.input.transpose() * dz + 2.0 * l2 * p.w;
  return dz * p.w.transpose();
}

/// Mean cross-entropy, correct count and (optionally) d(loss)/d(logits).
double softmax_cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> y, int& correct,
                             Eigen::MatrixXd* d_logits) {
  const auto n = logits.rows();
  double loss = 0.0;
  correct = 0;
  if (d_logits) d_logits->resize(n, logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    const double m = logits.row(i).maxCoeff(&arg);
    const Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
    const double s = e.sum();
    loss += -(logits(i, y[static_cast<std::size_t>(i)]) - m - std::log(s));
    if (arg == y[static_cast<std::size_t>(i)]) ++correct;
    if (d_logits) {
      d_logits->row(i) = e / s;
      (*d_logits)(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    }
  }
  if (d_logits) *d_logits /= static_cast<double>(n);
  return loss / static_cast<double>(n);
}

}  // namespace

Mlp::Mlp(int inputs, int hidden1, int hidden2, int classes, bool batch_norm, Rng& init)
    : batch_norm_(batch_norm) {
  if (inputs < 1 || hidden1 < 1 || hidden2 < 1 || classes < 1) throw InvalidInput("MLP layer sizes must be >= 1");
  w1_ = he_init(inputs, hidden1, init);
  b1_ = Eigen::MatrixXd::Zero(1, hidden1);
  g1_ = Eigen::MatrixXd::Ones(1, hidden1);
  be1_ = Eigen::MatrixXd::Zero(1, hidden1);
  w2_ = he_init(hidden1, hidden2, init);
  b2_ = Eigen::MatrixXd::Zero(1, hidden2);
  g2_ = Eigen::MatrixXd::Ones(1, hidden2);
  be2_ = Eigen::MatrixXd::Zero(1, hidden2);
  w3_ = he_init(hidden2, classes, init);
  b3_ = Eigen::MatrixXd::Zero(1, classes);
  mean1_ = Eigen::RowVectorXd::Zero(hidden1);
  var1_ = Eigen::RowVectorXd::Ones(hidden1);
  mean2_ = Eigen::RowVectorXd::Zero(hidden2);
  var2_ = Eigen::RowVectorXd::Ones(hidden2);
}

std::vector<Eigen::MatrixXd*> Mlp::parameters() {
  return {&w1_, &b1_, &g1_, &be1_, &w2_, &b2_, &g2_, &be2_, &w3_, &b3_};
}

std::vector<const Eigen::MatrixXd*> Mlp::parameters() const {
  return {&w1_, &b1_, &g1_, &be1_, &w2_, &b2_, &g2_, &be2_, &w3_, &b3_};
}

Mlp::Pass Mlp::train_pass(const Eigen::MatrixXd& x, std::span<const int> y, double l2, double dropout1,
                          double dropout2, Rng* dropout_rng, std::vector<Eigen::MatrixXd>* grads,
                          bool update_running) {
  const HiddenParams p1{w1_, b1_, g1_, be1_};
  const HiddenParams p2{w2_, b2_, g2_, be2_};
  HiddenCache c1, c2;
  hidden_forward(x, p1, batch_norm_, dropout1, dropout_rng, c1, update_running ? &mean1_ : nullptr,
                 update_running ? &var1_ : nullptr);
  hidden_forward(c1.out, p2, batch_norm_, dropout2, dropout_rng, c2, update_running ? &mean2_ : nullptr,
                 update_running ? &var2_ : nullptr);
  const Eigen::MatrixXd logits = (c2.out * w3_).rowwise() + b3_.row(0);

  Pass pass;
  Eigen::MatrixXd d_logits;
  pass.data_loss = softmax_cross_entropy(logits, y, pass.correct, grads ? &d_logits : nullptr);
  pass.loss = pass.data_loss + l2 * (w1_.squaredNorm() + w2_.squaredNorm() + w3_.squaredNorm());

  if (grads) {
    grads->assign(10, Eigen::MatrixXd());
    auto& g = *grads;
    g[8] = c2.out.transpose() * d_logits + 2.0 * l2 * w3_;
    g[9] = d_logits.colwise().sum();
    const Eigen::MatrixXd d2 = d_logits * w3_.transpose();
    const Eigen::MatrixXd d1 = hidden_backward(d2, p2, batch_norm_, l2, c2, g[4], g[5], g[6], g[7]);
    hidden_backward(d1, p1, batch_norm_, l2, c1, g[0], g[1], g[2], g[3]);
  }
  return pass;
}

Mlp::Pass Mlp::evaluate(const Eigen::MatrixXd& x, std::span<const int> y) const {
  auto layer = [&](const Eigen::MatrixXd& in, const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                   const Eigen::MatrixXd& g, const Eigen::MatrixXd& be, const Eigen::RowVectorXd& mean,
                   const Eigen::RowVectorXd& var) -> Eigen::MatrixXd {
    Eigen::MatrixXd z = in * w;
    if (batch_norm_) {
      z.rowwise() -= mean;
      const Eigen::RowVectorXd inv = (var.array() + kBnEpsilon).rsqrt();
      z = ((z.array().rowwise() * (inv.array() * g.row(0).array())).rowwise() + be.row(0).array()).matrix();
    } else {
      z.rowwise() += b.row(0);
    }
    return z.cwiseMax(0.0);
  };
  const Eigen::MatrixXd h1 = layer(x, w1_, b1_, g1_, be1_, mean1_, var1_);
  const Eigen::MatrixXd h2 = layer(h1, w2_, b2_, g2_, be2_, mean2_, var2_);
  const Eigen::MatrixXd logits = (h2 * w3_).rowwise() + b3_.row(0);
  Pass pass;
  pass.data_loss = softmax_cross_entropy(logits, y, pass.correct, nullptr);
  pass.loss = pass.data_loss;
  return pass;
}

void Mlp::sgd_step(const std::vector<Eigen::MatrixXd>& grads, double lr) {
  auto params = parameters();
  for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr * grads[i];
}

MlpRun train_mlp(const MlpSettings& s, const Dataset& data, int epochs, std::uint64_t seed) {
  validate(data);
  if (epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (!(s.learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
  if (s.dropout1 < 0.0 || s.dropout1 >= 1.0 || s.dropout2 < 0.0 || s.dropout2 >= 1.0)
    throw InvalidInput("dropout rates must lie in [0,1)");

  const auto f = data.features.cols();
  auto gather = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& x, std::vector<int>& y) {
    x.resize(static_cast<Eigen::Index>(idx.size()), f);
    y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(idx[i]));
      y[i] = data.labels[idx[i]];
    }
  };
  Eigen::MatrixXd x_train, x_val;
  std::vector<int> y_train, y_val;
  gather(data.train, x_train, y_train);
  gather(data.validation, x_val, y_val);

  // Standardize with training statistics.
  const Eigen::RowVectorXd mean = x_train.colwise().mean();
  Eigen::RowVectorXd sd = ((x_train.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j)
    if (sd(j) < 1e-12) sd(j) = 1.0;
  x_train = ((x_train.rowwise() - mean).array().rowwise() / sd.array()).matrix();
  x_val = ((x_val.rowwise() - mean).array().rowwise() / sd.array()).matrix();

  Rng rng(seed);
  Mlp model(static_cast<int>(f), s.hidden1, s.hidden2, data.n_classes, s.batch_norm, rng);
  TrainOutcome out;

  const auto n = y_train.size();
  int batch = std::max(1, s.batch_size);
  if (static_cast<std::size_t>(batch) > n) {
    out.notes.push_back("batch size " + std::to_string(batch) + " clamped to training-set size " +
                        std::to_string(n));
    batch = static_cast<int>(n);
  }
  const double l2 = s.l2 ? s.l2_lambda : 0.0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<Eigen::MatrixXd> grads;
  Eigen::MatrixXd xb;
  std::vector<int> yb;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double loss_sum = 0.0;
    int correct = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch));
      xb.resize(static_cast<Eigen::Index>(end - start), f);
      yb.resize(end - start);
      for (std::size_t k = start; k < end; ++k) {
        xb.row(static_cast<Eigen::Index>(k - start)) = x_train.row(static_cast<Eigen::Index>(order[k]));
        yb[k - start] = y_train[order[k]];
      }
      const auto pass = model.train_pass(xb, yb, l2, s.dropout1, s.dropout2, &rng, &grads, true);
      if (!std::isfinite(pass.loss))
        throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch), out.history);
      model.sgd_step(grads, s.learning_rate);
      loss_sum += pass.data_loss * static_cast<double>(end - start);
      correct += pass.correct;
    }
    const auto val = model.evaluate(x_val, y_val);
    const double train_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(train_loss) || !std::isfinite(val.data_loss))
      throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch), out.history);
    out.history.push(train_loss, val.data_loss, static_cast<double>(correct) / static_cast<double>(n),
                     static_cast<double>(val.correct) / static_cast<double>(y_val.size()));
  }
  out.result.final_val_loss = out.history.val_loss.back();
  out.result.final_val_acc = out.history.val_acc.back();
  out.result.objective = out.result.final_val_loss;
  return {std::move(out), std::move(model)};
}

MlpSettings mlp_settings_from_request(const TrainRequest& req, const RoleBindings& roles) {
  if (roles.units.empty()) throw RuleBindingError("MLP trainee needs a unit_count dimension");
  MlpSettings s;
  s.hidden1 = static_cast<int>(require_number(req.assignment, roles.units[0]));
  s.hidden2 = static_cast<int>(require_number(req.assignment, roles.units.size() > 1 ? roles.units[1] : roles.units[0]));
  s.learning_rate = require_number(req.assignment, roles.learning_rate);
  s.batch_size = static_cast<int>(require_number(req.assignment, roles.batch_size));
  if (!roles.dropout.empty()) {
    s.dropout1 = require_number(req.assignment, roles.dropout[0]);
    s.dropout2 = require_number(req.assignment, roles.dropout.size() > 1 ? roles.dropout[1] : roles.dropout[0]);
  }
  for (const auto& d : req.directives) {
    switch (parse_directive(d)) {
      case Directive::l2_regularization:
        s.l2 = true;
        s.l2_lambda = require_number(req.assignment, roles.l2);
        break;
      case Directive::batch_normalization:
        s.batch_norm = true;
        break;
    }
  }
  return s;
}

TrainOutcome mlp_train(const TrainRequest& req, const Dataset& data, const RoleBindings& roles) {
  return train_mlp(mlp_settings_from_request(req, roles), data, req.epochs, req.seed).outcome;
}

}  // namespace rulebo
