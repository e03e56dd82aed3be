#include "rulebo/diagnosis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rulebo/errors.hpp"

namespace rulebo {

namespace {

std::size_t tail_length(std::size_t n, double tail_fraction) {
  const auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * tail_fraction));
  return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace

void validate(const History& h) {
  const auto n = h.val_loss.size();
  if (h.train_loss.size() != n || h.train_acc.size() != n || h.val_acc.size() != n)
    throw InvalidInput("history series have different lengths");
  for (const auto* s : {&h.train_loss, &h.val_loss})
    for (double v : *s)
      if (!std::isfinite(v) || v < 0.0) throw InvalidInput("history loss must be finite and non-negative");
  for (const auto* s : {&h.train_acc, &h.val_acc})
    for (double v : *s)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("history accuracy must lie in [0,1]");
}

void validate(const DiagnosisThresholds& t) {
  for (double v : {t.overfit_gap, t.underfit_loss, t.underfit_acc, t.noise_score,
                   t.trend_min_rel_rise, t.tail_fraction})
    if (!(v > 0.0)) throw InvalidInput("diagnosis thresholds must be positive");
  if (t.tail_fraction > 1.0) throw InvalidInput("tail_fraction must be <= 1");
}

std::string_view issue_name(IssueKind kind) {
  switch (kind) {
    case IssueKind::overfitting: return "overfitting";
    case IssueKind::underfitting: return "underfitting";
    case IssueKind::increasing_loss_trend: return "increasing_loss_trend";
    case IssueKind::fluctuating_loss: return "fluctuating_loss";
  }
  return "";
}

IssueKind parse_issue(std::string_view name) {
  for (auto k : {IssueKind::overfitting, IssueKind::underfitting,
                 IssueKind::increasing_loss_trend, IssueKind::fluctuating_loss})
    if (issue_name(k) == name) return k;
  throw InvalidInput("unknown issue '" + std::string(name) + "'");
}

double tail_mean(std::span<const double> series, double tail_fraction) {
  if (series.empty()) throw EmptyHistory("tail_mean of an empty series");
  const auto k = tail_length(series.size(), tail_fraction);
  const auto tail = series.last(k);
  return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(k);
}

std::optional<Issue> detect_overfitting(const History& h, const DiagnosisThresholds& t) {
  const double gap = tail_mean(h.train_acc, t.tail_fraction) - tail_mean(h.val_acc, t.tail_fraction);
  const bool val_worse = tail_mean(h.val_loss, t.tail_fraction) > tail_mean(h.train_loss, t.tail_fraction);
  if (gap > t.overfit_gap && val_worse) return Issue{IssueKind::overfitting, gap};
  return std::nullopt;
}

std::optional<Issue> detect_underfitting(const History& h, const EvalResult&,
                                         const DiagnosisThresholds& t) {
  const double loss = tail_mean(h.train_loss, t.tail_fraction);
  const double acc = tail_mean(h.train_acc, t.tail_fraction);
  if (loss > t.underfit_loss && acc < t.underfit_acc) return Issue{IssueKind::underfitting, loss};
  return std::nullopt;
}

double oscillation_score(std::span<const double> loss) {
  if (loss.size() < 3) throw InsufficientHistory("oscillation_score needs at least 3 epochs");
  std::size_t flips = 0;
  for (std::size_t i = 0; i + 2 < loss.size(); ++i) {
    const double d0 = loss[i + 1] - loss[i];
    const double d1 = loss[i + 2] - loss[i + 1];
    if (d0 * d1 < 0.0) ++flips;
  }
  return static_cast<double>(flips) / static_cast<double>(loss.size() - 2);
}

double loss_slope(std::span<const double> loss, double tail_fraction) {
  if (loss.empty()) throw InsufficientHistory("loss_slope of an empty series");
  const auto k = tail_length(loss.size(), tail_fraction);
  if (k < 2) throw InsufficientHistory("loss_slope needs a tail window of at least 2 epochs");
  const auto tail = loss.last(k);
  const double n = static_cast<double>(k);
  const double x_mean = (n - 1.0) / 2.0;
  const double y_mean = std::accumulate(tail.begin(), tail.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxy += dx * (tail[i] - y_mean);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

DiagnosisReport diagnose(const History& h, const EvalResult& r, const DiagnosisThresholds& t) {
  validate(t);
  validate(h);
  if (h.epochs() == 0) throw EmptyHistory("cannot diagnose an empty history");

  DiagnosisReport report;
  const auto over = detect_overfitting(h, t);
  if (over) {
    report.push_back(*over);
  } else if (auto under = detect_underfitting(h, r, t)) {
    report.push_back(*under);
  }

  const double slope = loss_slope(h.val_loss, t.tail_fraction);
  const double floor = *std::min_element(h.val_loss.begin(), h.val_loss.end());
  const double tail = tail_mean(h.val_loss, t.tail_fraction);
  if (slope > 0.0 && tail > (1.0 + t.trend_min_rel_rise) * floor)
    report.push_back({IssueKind::increasing_loss_trend, slope});

  const double osc = oscillation_score(h.val_loss);
  if (osc > t.noise_score) report.push_back({IssueKind::fluctuating_loss, osc});
  return report;
}

std::string format_report(const DiagnosisReport& report) {
  std::string s;
  for (const auto& issue : report) {
    if (!s.empty()) s += ';';
    s += issue_name(issue.kind);
  }
  return s;
}

}  // namespace rulebo
