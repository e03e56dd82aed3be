#include "rulebo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rulebo/errors.hpp"

namespace rulebo {

namespace {

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Strict "a beats b" under the tie-break order.
bool better(const Candidate& a, std::size_t ia, const Candidate& b, std::size_t ib) {
  if (a.ei != b.ei) return a.ei > b.ei;
  if (a.mean != b.mean) return a.mean < b.mean;
  return ia < ib;
}

}  // namespace

void validate(const AcquisitionConfig& config) {
  if (config.candidate_count < 1) throw InvalidInput("candidate_count must be >= 1");
  if (config.refine_steps < 0) throw InvalidInput("refine_steps must be >= 0");
  if (!(config.xi >= 0.0)) throw InvalidInput("xi must be non-negative");
}

double expected_improvement(double mean, double std, double best_y, double xi) {
  if (!(std >= 0.0)) throw InvalidInput("expected_improvement: negative standard deviation");
  if (!(xi >= 0.0)) throw InvalidInput("expected_improvement: negative xi");
  const double delta = best_y - mean - xi;
  if (std == 0.0) return std::max(delta, 0.0);
  const double z = delta / std;
  return std::max(0.0, delta * normal_cdf(z) + std * normal_pdf(z));
}

Assignment propose_next(const GpModel& model, const SearchSpace& space, double best_y,
                        Rng& rng, const AcquisitionConfig& config, ProposalTrace* trace) {
  validate(config);
  if (space.empty()) throw InvalidSpace("cannot propose in an empty space");
  const auto d = space.size();
  if (static_cast<std::size_t>(model.dimension()) != d)
    throw DimensionMismatch("model dimension does not match the search space");

  auto score = [&](std::vector<double> x) {
    const Posterior post = model.posterior(x);
    Candidate c;
    c.ei = expected_improvement(post.mean, std::sqrt(post.variance), best_y, config.xi);
    c.mean = post.mean;
    c.point = std::move(x);
    return c;
  };

  std::vector<double> shift(d);
  for (auto& s : shift) s = rng.uniform();

  std::vector<Candidate> cands;
  cands.reserve(static_cast<std::size_t>(config.candidate_count + config.refine_steps));
  for (int i = 0; i < config.candidate_count; ++i) {
    auto x = halton_point(static_cast<std::uint64_t>(i + 1), d);
    for (std::size_t j = 0; j < d; ++j) {
      x[j] += shift[j];
      if (x[j] >= 1.0) x[j] -= 1.0;
    }
    cands.push_back(score(std::move(x)));
  }

  auto argmax = [&](std::size_t end) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < end; ++i)
      if (better(cands[i], i, cands[best], best)) best = i;
    return best;
  };

  const std::size_t sweep_end = cands.size();
  const std::vector<double> incumbent = cands[argmax(sweep_end)].point;
  for (int s = 0; s < config.refine_steps; ++s) {
    auto x = incumbent;
    const auto j = static_cast<std::size_t>(s) % d;
    x[j] = std::clamp(x[j] + 0.05 * rng.normal(), 0.0, 1.0);
    cands.push_back(score(std::move(x)));
  }

  const std::size_t chosen = argmax(cands.size());
  Assignment a = decode(space, cands[chosen].point);
  if (trace) {
    trace->candidates = std::move(cands);
    trace->chosen = chosen;
  }
  return a;
}

}  // namespace rulebo
