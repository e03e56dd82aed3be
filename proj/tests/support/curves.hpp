#pragma once

// Hand-built training curves, one per pathology plus a clean run.

#include <cmath>

#include "rulebo/diagnosis.hpp"

namespace curves {

inline constexpr int kEpochs = 20;

inline rulebo::History clean() {
  rulebo::History h;
  for (int e = 0; e < kEpochs; ++e) {
    const double d = std::exp(-e / 4.0);
    h.push(0.05 + 1.0 * d, 0.07 + 1.0 * d, 0.95 - 0.5 * d, 0.93 - 0.5 * d);
  }
  return h;
}

// Training accuracy well above validation, validation loss above training.
inline rulebo::History gap() {
  rulebo::History h;
  for (int e = 0; e < kEpochs; ++e) {
    const double d = std::exp(-e / 4.0);
    h.push(0.05 + 1.0 * d, 0.6 + 0.8 * d, 0.99 - 0.6 * d, 0.75 - 0.4 * d);
  }
  return h;
}

// Loss stuck near chance level for a 10-class problem.
inline rulebo::History high_loss() {
  rulebo::History h;
  for (int e = 0; e < kEpochs; ++e) {
    const double d = 1.0 - std::exp(-e / 5.0);
    h.push(2.3 - 0.2 * d, 2.32 - 0.2 * d, 0.11 + 0.05 * d, 0.10 + 0.05 * d);
  }
  return h;
}

// Validation loss alternating around a slow decline.
inline rulebo::History alternating() {
  rulebo::History h;
  for (int e = 0; e < kEpochs; ++e) {
    const double sign = e % 2 == 0 ? 1.0 : -1.0;
    h.push(0.45 - 0.005 * e, 0.5 - 0.005 * e - 0.05 * sign, 0.9, 0.88);
  }
  return h;
}

// Validation loss bottoms out and climbs.
inline rulebo::History rising() {
  rulebo::History h;
  for (int e = 0; e < kEpochs; ++e) {
    const double val = e < 10 ? 0.3 + std::exp(-e / 3.0) : 0.3 + std::exp(-9 / 3.0) + 0.04 * (e - 9);
    h.push(0.3 + 0.5 * std::exp(-e / 3.0), val, 0.85, 0.82);
  }
  return h;
}

inline rulebo::EvalResult result_of(const rulebo::History& h) {
  return {h.val_loss.back(), h.val_acc.back(), h.val_loss.back()};
}

}  // namespace curves
