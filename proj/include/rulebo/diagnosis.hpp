#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rulebo {

/// Per-epoch training/validation curves of one training run.
struct History {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> train_acc;
  std::vector<double> val_acc;

  std::size_t epochs() const { return val_loss.size(); }
  void push(double tl, double vl, double ta, double va) {
    train_loss.push_back(tl);
    val_loss.push_back(vl);
    train_acc.push_back(ta);
    val_acc.push_back(va);
  }
  friend bool operator==(const History&, const History&) = default;
};

/// Throws InvalidInput if series lengths differ, a loss is negative or
/// non-finite, or an accuracy lies outside [0,1]. Empty histories are valid
/// here; the detectors reject them with EmptyHistory.
void validate(const History& h);

struct EvalResult {
  double final_val_loss = 0.0;
  double final_val_acc = 0.0;
  double objective = 0.0;
  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

struct DiagnosisThresholds {
  double overfit_gap = 0.10;
  double underfit_loss = 1.0;
  double underfit_acc = 0.6;
  double noise_score = 0.25;
  double trend_min_rel_rise = 0.05;
  double tail_fraction = 0.25;
};

void validate(const DiagnosisThresholds& t);

enum class IssueKind { overfitting, underfitting, increasing_loss_trend, fluctuating_loss };

std::string_view issue_name(IssueKind kind);
IssueKind parse_issue(std::string_view name);

struct Issue {
  IssueKind kind;
  double score = 0.0;
  friend bool operator==(const Issue&, const Issue&) = default;
};

using DiagnosisReport = std::vector<Issue>;

/// Mean of the last ceil(E * tail_fraction) entries.
double tail_mean(std::span<const double> series, double tail_fraction);

std::optional<Issue> detect_overfitting(const History& h, const DiagnosisThresholds& t);
std::optional<Issue> detect_underfitting(const History& h, const EvalResult& r,
                                         const DiagnosisThresholds& t);

/// Fraction of consecutive first-difference pairs whose product is negative.
double oscillation_score(std::span<const double> loss);

/// Least-squares slope of the tail window against epoch index.
double loss_slope(std::span<const double> loss, double tail_fraction);

/// Runs every detector. Report order is fixed: overfitting, underfitting,
/// increasing loss trend, fluctuating loss. Over- and underfitting never
/// appear together.
DiagnosisReport diagnose(const History& h, const EvalResult& r, const DiagnosisThresholds& t);

std::string format_report(const DiagnosisReport& report);

}  // namespace rulebo
