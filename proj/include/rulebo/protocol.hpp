#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rulebo/json_io.hpp"
#include "rulebo/trainee.hpp"

namespace rulebo::protocol {

inline constexpr int kVersion = 1;

json capabilities_message(const Capabilities& caps);
json train_message(const TrainRequest& req);
json epoch_message(int epoch, double train_loss, double val_loss, double train_acc, double val_acc);
json result_message(const EvalResult& r);
json error_message(std::string_view message);

Capabilities parse_capabilities(const json& msg);
TrainRequest parse_train(const json& msg);

/// Drops requested directives the trainee does not declare. Returns one
/// note per dropped directive.
std::vector<std::string> negotiate(const Capabilities& caps, TrainRequest& req);

/// Incremental validator for the trainee -> controller stream of a single
/// training: epoch records then exactly one result. Errors carry the
/// 1-based line number of the offending message.
class TrainingStream {
 public:
  /// `lines_before` offsets reported line numbers, e.g. 1 when the
  /// capabilities message was already consumed from the same stream.
  explicit TrainingStream(std::size_t lines_before = 0) : line_(lines_before) {}

  /// Feeds one line. Returns true once the result message arrived.
  bool feed(std::string_view line);
  bool done() const noexcept { return result_.has_value(); }
  TrainOutcome outcome() const;
  std::size_t line_number() const noexcept { return line_; }

 private:
  std::size_t line_;
  History history_;
  std::optional<EvalResult> result_;
};

/// Parses one protocol line into a JSON object with a string "type".
/// `line_number` is only used in error messages.
json parse_line(std::string_view line, std::size_t line_number);

}  // namespace rulebo::protocol

namespace rulebo {

/// Runs one training against an external process speaking protocol v1 on
/// its stdin/stdout. The process is spawned per call and receives EOF on
/// stdin after the result arrives.
TrainOutcome run_external_trainee(const std::vector<std::string>& command,
                                  const TrainRequest& req, double timeout_s);

class ExternalTrainee : public Trainee {
 public:
  ExternalTrainee(std::vector<std::string> command, double timeout_s)
      : command_(std::move(command)), timeout_s_(timeout_s) {}
  std::string name() const override;
  TrainOutcome train(const TrainRequest& request) override {
    return run_external_trainee(command_, request, timeout_s_);
  }

 private:
  std::vector<std::string> command_;
  double timeout_s_;
};

}  // namespace rulebo
