#include "rulebo/surrogate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "rulebo/errors.hpp"

namespace rulebo {

namespace {

constexpr std::array<std::uint32_t, 40> kPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,
    47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107,
    109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173};

double radical_inverse(std::uint64_t index, std::uint32_t base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

struct StandardizedTargets {
  Eigen::VectorXd values;
  double mean = 0.0;
  double std = 1.0;
};

StandardizedTargets standardize(const Eigen::VectorXd& raw) {
  StandardizedTargets out;
  out.mean = raw.mean();
  const double var = (raw.array() - out.mean).square().mean();
  out.std = std::max(std::sqrt(var), 1e-12);
  out.values = (raw.array() - out.mean) / out.std;
  return out;
}

void check_inputs(const Eigen::MatrixXd& inputs, const KernelParams& params) {
  if (static_cast<std::size_t>(inputs.cols()) != params.length_scales.size())
    throw DimensionMismatch("input dimension does not match the number of length scales");
}

}  // namespace

std::vector<double> halton_point(std::uint64_t index, std::size_t dim) {
  if (dim > kPrimes.size()) throw InvalidInput("Halton sequence supports at most 40 dimensions");
  std::vector<double> p(dim);
  for (std::size_t j = 0; j < dim; ++j) p[j] = radical_inverse(index, kPrimes[j]);
  return p;
}

void validate(const KernelParams& params) {
  for (double l : params.length_scales)
    if (!(l > 0.0) || !std::isfinite(l)) throw InvalidInput("length scales must be positive");
  if (!(params.signal_variance > 0.0)) throw InvalidInput("signal variance must be positive");
  if (!(params.noise_variance >= 0.0)) throw InvalidInput("noise variance must be non-negative");
}

double kernel(std::span<const double> x1, std::span<const double> x2,
              const KernelParams& params) {
  if (x1.size() != x2.size() || x1.size() != params.length_scales.size())
    throw DimensionMismatch("kernel arguments have mismatched dimensions");
  double r2 = 0.0;
  for (std::size_t j = 0; j < x1.size(); ++j) {
    const double d = (x1[j] - x2[j]) / params.length_scales[j];
    r2 += d * d;
  }
  return params.signal_variance * std::exp(-0.5 * r2);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const KernelParams& params) {
  if (a.cols() != b.cols()) throw DimensionMismatch("kernel_matrix: column count differs");
  check_inputs(a, params);
  const Eigen::Map<const Eigen::ArrayXd> ls(params.length_scales.data(),
                                            static_cast<Eigen::Index>(params.length_scales.size()));
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double r2 = ((a.row(i).array() - b.row(j).array()) / ls.transpose()).square().sum();
      k(i, j) = params.signal_variance * std::exp(-0.5 * r2);
    }
  }
  return k;
}

Factorization factorize(const Eigen::MatrixXd& inputs, const KernelParams& params) {
  const Eigen::MatrixXd k = kernel_matrix(inputs, inputs, params);
  double jitter = 1e-10;
  for (int step = 0; step <= 6; ++step, jitter *= 10.0) {
    Eigen::MatrixXd a = k;
    a.diagonal().array() += params.noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      if (lower.diagonal().minCoeff() > 0.0 && lower.allFinite()) return {std::move(lower), jitter};
    }
  }
  throw NumericalFailure("Cholesky factorization failed after jitter escalation to 1e-4");
}

double log_marginal_likelihood(const Eigen::MatrixXd& inputs,
                               const Eigen::VectorXd& targets,
                               const KernelParams& params) {
  if (inputs.rows() < 1) throw InsufficientData("log marginal likelihood needs at least one point");
  if (inputs.rows() != targets.size()) throw DimensionMismatch("inputs and targets differ in length");
  const Factorization f = factorize(inputs, params);
  const auto l = f.lower.triangularView<Eigen::Lower>();
  const Eigen::VectorXd v = l.solve(targets);
  const double n = static_cast<double>(targets.size());
  return -0.5 * v.squaredNorm() - f.lower.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

GpModel::GpModel(Eigen::MatrixXd inputs, const Eigen::VectorXd& raw_targets,
                 KernelParams params)
    : inputs_(std::move(inputs)), params_(std::move(params)) {
  if (inputs_.rows() < 1) throw InsufficientData("GP needs at least one observation");
  if (inputs_.rows() != raw_targets.size()) throw DimensionMismatch("inputs and targets differ in length");
  check_inputs(inputs_, params_);
  validate(params_);
  auto st = standardize(raw_targets);
  targets_ = std::move(st.values);
  target_mean_ = st.mean;
  target_std_ = st.std;
  factor_ = factorize(inputs_, params_);
  const auto l = factor_.lower.triangularView<Eigen::Lower>();
  alpha_ = factor_.lower.transpose().triangularView<Eigen::Upper>().solve(l.solve(targets_));
}

double GpModel::log_marginal_likelihood() const {
  const auto l = factor_.lower.triangularView<Eigen::Lower>();
  const Eigen::VectorXd v = l.solve(targets_);
  return -0.5 * v.squaredNorm() - factor_.lower.diagonal().array().log().sum() -
         0.5 * static_cast<double>(targets_.size()) * std::log(2.0 * std::numbers::pi);
}

Posterior GpModel::posterior(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != dimension())
    throw DimensionMismatch("query point dimension does not match the model");
  Eigen::VectorXd ks(size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    const Eigen::VectorXd row = inputs_.row(i).transpose();
    ks(i) = kernel(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), x, params_);
  }
  const double mean = ks.dot(alpha_);
  const Eigen::VectorXd v = factor_.lower.triangularView<Eigen::Lower>().solve(ks);
  const double var = std::max(0.0, params_.signal_variance - v.squaredNorm());
  return {mean * target_std_ + target_mean_, var * target_std_ * target_std_};
}

namespace {

// Log-space search coordinates: d length scales, then signal, then noise.
struct SearchBounds {
  std::vector<double> lo, hi;
};

SearchBounds make_bounds(std::size_t d, const FitConfig& c) {
  SearchBounds b;
  for (std::size_t j = 0; j < d; ++j) {
    b.lo.push_back(std::log(c.length_min));
    b.hi.push_back(std::log(c.length_max));
  }
  b.lo.push_back(std::log(c.signal_min));
  b.hi.push_back(std::log(c.signal_max));
  b.lo.push_back(std::log(c.noise_min));
  b.hi.push_back(std::log(c.noise_max));
  return b;
}

KernelParams to_params(const std::vector<double>& theta, std::size_t d) {
  KernelParams p;
  for (std::size_t j = 0; j < d; ++j) p.length_scales.push_back(std::exp(theta[j]));
  p.signal_variance = std::exp(theta[d]);
  p.noise_variance = std::exp(theta[d + 1]);
  return p;
}

}  // namespace

GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& raw_targets,
            const FitConfig& config) {
  if (inputs.rows() < 1) throw InsufficientData("fit needs at least one observation");
  if (inputs.rows() != raw_targets.size()) throw DimensionMismatch("inputs and targets differ in length");
  const auto d = static_cast<std::size_t>(inputs.cols());
  const SearchBounds bounds = make_bounds(d, config);
  const std::size_t p = d + 2;

  auto clamp_theta = [&](std::vector<double> theta) {
    for (std::size_t j = 0; j < p; ++j) theta[j] = std::clamp(theta[j], bounds.lo[j], bounds.hi[j]);
    return theta;
  };

  if (inputs.rows() == 1) {
    std::vector<double> theta(p);
    for (std::size_t j = 0; j < d; ++j) theta[j] = std::log(0.5);
    theta[d] = 0.0;
    theta[d + 1] = std::log(1e-6);
    return GpModel(inputs, raw_targets, to_params(clamp_theta(theta), d));
  }

  const Eigen::VectorXd y = standardize(raw_targets).values;
  auto objective = [&](const std::vector<double>& theta) {
    try {
      const double v = log_marginal_likelihood(inputs, y, to_params(theta, d));
      return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const NumericalFailure&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  std::vector<double> best_theta;
  double best_value = -std::numeric_limits<double>::infinity();

  for (int s = 0; s < std::max(config.starts, 1); ++s) {
    const auto u = halton_point(static_cast<std::uint64_t>(s + 1), p);
    std::vector<double> theta(p);
    for (std::size_t j = 0; j < p; ++j) theta[j] = bounds.lo[j] + u[j] * (bounds.hi[j] - bounds.lo[j]);
    double value = objective(theta);

    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
      const double before = value;
      for (std::size_t j = 0; j < p; ++j) {
        if (bounds.hi[j] <= bounds.lo[j]) continue;
        auto line = [&](double t) {
          auto trial = theta;
          trial[j] = t;
          return objective(trial);
        };
        double a = bounds.lo[j], b = bounds.hi[j];
        double c = b - inv_phi * (b - a), e = a + inv_phi * (b - a);
        double fc = line(c), fe = line(e);
        for (int it = 0; it < config.max_iterations && (b - a) > 1e-4; ++it) {
          if (fc >= fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = line(c);
          } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = line(e);
          }
        }
        const double cand = fc >= fe ? c : e;
        const double fcand = std::max(fc, fe);
        if (fcand > value) {
          theta[j] = cand;
          value = fcand;
        }
      }
      if (!(value - before > config.sweep_tolerance)) break;
    }
    if (value > best_value) {
      best_value = value;
      best_theta = theta;
    }
  }

  if (best_theta.empty()) throw NumericalFailure("marginal likelihood is not finite anywhere in the search bounds");
  return GpModel(inputs, raw_targets, to_params(best_theta, d));
}

}  // namespace rulebo
