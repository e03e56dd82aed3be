#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace rulebo {

/// Squared-exponential ARD kernel hyper-parameters.
struct KernelParams {
  std::vector<double> length_scales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

void validate(const KernelParams& params);

/// sv * exp(-0.5 * sum_j ((x1_j - x2_j) / l_j)^2)
double kernel(std::span<const double> x1, std::span<const double> x2,
              const KernelParams& params);

/// Covariance between the rows of `a` and the rows of `b`.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const KernelParams& params);

/// Lower Cholesky factor of K + (noise + jitter) I, escalating jitter over
/// 1e-10 * 10^k for k = 0..6. Throws NumericalFailure if none succeeds.
struct Factorization {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};
Factorization factorize(const Eigen::MatrixXd& inputs, const KernelParams& params);

/// Log marginal likelihood of `targets` (assumed standardized) under the GP
/// prior, computed through the Cholesky factor.
double log_marginal_likelihood(const Eigen::MatrixXd& inputs,
                               const Eigen::VectorXd& targets,
                               const KernelParams& params);

/// Bounds and budget for the marginal-likelihood search. Each bound pair is
/// searched in log space; setting min == max pins the parameter.
struct FitConfig {
  int starts = 8;
  int max_iterations = 50;  // golden-section iterations per line search
  int max_sweeps = 20;
  double sweep_tolerance = 1e-9;
  double length_min = 0.01, length_max = 10.0;
  double signal_min = 0.1, signal_max = 10.0;
  double noise_min = 1e-8, noise_max = 1e-1;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Fitted GP. Immutable; posterior queries are const and thread-safe.
class GpModel {
 public:
  /// Conditions on data with fixed kernel parameters.
  GpModel(Eigen::MatrixXd inputs, const Eigen::VectorXd& raw_targets,
          KernelParams params);

  Posterior posterior(std::span<const double> x) const;

  Eigen::Index size() const { return inputs_.rows(); }
  Eigen::Index dimension() const { return inputs_.cols(); }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const KernelParams& params() const { return params_; }
  const Eigen::MatrixXd& factor() const { return factor_.lower; }
  double jitter() const { return factor_.jitter; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }
  double log_marginal_likelihood() const;

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  KernelParams params_;
  Factorization factor_;
  Eigen::VectorXd alpha_;
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
};

/// Standardizes targets, then picks kernel parameters maximizing the log
/// marginal likelihood by multi-start coordinate-wise golden-section search.
/// With a single observation the search is skipped and defaults are used.
GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& raw_targets,
            const FitConfig& config = {});

/// Radical-inverse Halton point for `index` >= 1 over the first `dim` primes.
std::vector<double> halton_point(std::uint64_t index, std::size_t dim);

}  // namespace rulebo
