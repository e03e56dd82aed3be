#pragma once

#include <vector>

#include "rulebo/random.hpp"
#include "rulebo/space.hpp"
#include "rulebo/surrogate.hpp"

namespace rulebo {

struct AcquisitionConfig {
  int candidate_count = 1024;
  int refine_steps = 32;
  double xi = 0.0;
};

void validate(const AcquisitionConfig& config);

/// Closed-form expected improvement for minimization under a Gaussian
/// predictive distribution N(mean, std^2) against incumbent `best_y`.
double expected_improvement(double mean, double std, double best_y, double xi = 0.0);

struct Candidate {
  std::vector<double> point;
  double ei = 0.0;
  double mean = 0.0;
};

/// Every candidate scored during one proposal, in evaluation order:
/// the quasi-random sweep followed by the refinement perturbations.
struct ProposalTrace {
  std::vector<Candidate> candidates;
  std::size_t chosen = 0;
};

/// Maximizes EI over a randomly shifted Halton sweep of [0,1]^d plus
/// single-coordinate Gaussian perturbations of the sweep's best point.
/// Ties go to the lower posterior mean, then the lower candidate index.
Assignment propose_next(const GpModel& model, const SearchSpace& space, double best_y,
                        Rng& rng, const AcquisitionConfig& config,
                        ProposalTrace* trace = nullptr);

}  // namespace rulebo
