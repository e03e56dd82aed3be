#include "rulebo/protocol.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>

namespace rulebo::protocol {

namespace {

double finite_number(const json& msg, const char* key, std::size_t line) {
  auto it = msg.find(key);
  if (it == msg.end() || !it->is_number())
    throw ProtocolError("line " + std::to_string(line) + ": field '" + key + "' missing or not a number");
  const double v = it->get<double>();
  if (!std::isfinite(v))
    throw ProtocolError("line " + std::to_string(line) + ": field '" + key + "' is not finite");
  return v;
}

}  // namespace

json capabilities_message(const Capabilities& caps) {
  return {{"type", "capabilities"}, {"version", caps.version}, {"directives", caps.directives},
          {"name", caps.name}};
}

json train_message(const TrainRequest& req) {
  return {{"type", "train"},       {"assignment", to_json(req.assignment)},
          {"directives", req.directives}, {"epochs", req.epochs},
          {"seed", req.seed}};
}

json epoch_message(int epoch, double train_loss, double val_loss, double train_acc, double val_acc) {
  return {{"type", "epoch"},         {"epoch", epoch},         {"train_loss", train_loss},
          {"val_loss", val_loss},    {"train_acc", train_acc}, {"val_acc", val_acc}};
}

json result_message(const EvalResult& r) {
  return {{"type", "result"}, {"objective", r.objective}, {"final_val_loss", r.final_val_loss},
          {"final_val_acc", r.final_val_acc}};
}

json error_message(std::string_view message) {
  return {{"type", "error"}, {"message", std::string(message)}};
}

json parse_line(std::string_view line, std::size_t line_number) {
  json msg = json::parse(line.begin(), line.end(), nullptr, false);
  if (msg.is_discarded() || !msg.is_object())
    throw ProtocolError("line " + std::to_string(line_number) + ": not a JSON object");
  auto t = msg.find("type");
  if (t == msg.end() || !t->is_string())
    throw ProtocolError("line " + std::to_string(line_number) + ": missing message type");
  return msg;
}

Capabilities parse_capabilities(const json& msg) {
  if (msg.value("type", "") != "capabilities") throw ProtocolError("line 1: expected a capabilities message");
  Capabilities caps;
  auto v = msg.find("version");
  if (v == msg.end() || !v->is_number_integer()) throw ProtocolError("line 1: capabilities lack an integer version");
  caps.version = v->get<int>();
  if (caps.version != kVersion)
    throw ProtocolError("line 1: unsupported protocol version " + std::to_string(caps.version));
  auto d = msg.find("directives");
  if (d != msg.end()) {
    if (!d->is_array()) throw ProtocolError("line 1: directives must be an array");
    for (const auto& x : *d) {
      if (!x.is_string()) throw ProtocolError("line 1: directive names must be strings");
      caps.directives.push_back(x.get<std::string>());
    }
  }
  auto n = msg.find("name");
  caps.name = (n != msg.end() && n->is_string()) ? n->get<std::string>() : std::string("external");
  return caps;
}

TrainRequest parse_train(const json& msg) {
  if (msg.value("type", "") != "train") throw ProtocolError("expected a train message");
  TrainRequest req;
  try {
    req.assignment = assignment_from_json(msg.at("assignment"));
    req.directives = msg.value("directives", std::vector<std::string>{});
    req.epochs = msg.at("epochs").get<int>();
    req.seed = msg.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed train message: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ProtocolError(std::string("malformed train message: ") + e.what());
  }
  if (req.epochs < 1) throw ProtocolError("train message requires epochs >= 1");
  return req;
}

std::vector<std::string> negotiate(const Capabilities& caps, TrainRequest& req) {
  std::vector<std::string> notes;
  std::vector<std::string> kept;
  for (const auto& d : req.directives) {
    if (std::find(caps.directives.begin(), caps.directives.end(), d) != caps.directives.end()) {
      kept.push_back(d);
    } else {
      notes.push_back("downgrade: trainee '" + caps.name + "' does not support directive '" + d + "'");
    }
  }
  req.directives = std::move(kept);
  return notes;
}

bool TrainingStream::feed(std::string_view line) {
  ++line_;
  if (done()) throw ProtocolError("line " + std::to_string(line_) + ": message after the result");
  const json msg = parse_line(line, line_);
  const auto type = msg.at("type").get<std::string>();
  if (type == "epoch") {
    auto e = msg.find("epoch");
    if (e == msg.end() || !e->is_number_integer())
      throw ProtocolError("line " + std::to_string(line_) + ": epoch index missing");
    if (e->get<long long>() != static_cast<long long>(history_.epochs()))
      throw ProtocolError("line " + std::to_string(line_) + ": epoch indices must increase by one from 0");
    const double tl = finite_number(msg, "train_loss", line_);
    const double vl = finite_number(msg, "val_loss", line_);
    const double ta = finite_number(msg, "train_acc", line_);
    const double va = finite_number(msg, "val_acc", line_);
    if (tl < 0.0 || vl < 0.0 || ta < 0.0 || ta > 1.0 || va < 0.0 || va > 1.0)
      throw ProtocolError("line " + std::to_string(line_) + ": metric out of range");
    history_.push(tl, vl, ta, va);
    return false;
  }
  if (type == "result") {
    if (history_.epochs() == 0)
      throw ProtocolError("line " + std::to_string(line_) + ": result before any epoch record");
    EvalResult r;
    r.objective = finite_number(msg, "objective", line_);
    r.final_val_loss = finite_number(msg, "final_val_loss", line_);
    r.final_val_acc = finite_number(msg, "final_val_acc", line_);
    result_ = r;
    return true;
  }
  if (type == "error") {
    throw TraineeCrashed("trainee reported error: " + msg.value("message", std::string("(no message)")));
  }
  throw ProtocolError("line " + std::to_string(line_) + ": unexpected message type '" + type + "'");
}

TrainOutcome TrainingStream::outcome() const {
  if (!result_) throw ProtocolError("training stream ended without a result");
  return {history_, *result_, {}};
}

}  // namespace rulebo::protocol

namespace rulebo {

namespace {

using Clock = std::chrono::steady_clock;

class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& command) {
    if (command.empty()) throw InvalidInput("empty trainee command");
    int in[2], out[2];
    if (pipe(in) != 0 || pipe(out) != 0) throw TraineeCrashed(std::string("pipe: ") + std::strerror(errno));
    pid_ = fork();
    if (pid_ < 0) throw TraineeCrashed(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      dup2(in[0], STDIN_FILENO);
      dup2(out[1], STDOUT_FILENO);
      close(in[0]);
      close(in[1]);
      close(out[0]);
      close(out[1]);
      std::vector<char*> argv;
      for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      execvp(argv[0], argv.data());
      _exit(127);
    }
    close(in[0]);
    close(out[1]);
    stdin_ = in[1];
    stdout_ = out[0];
  }

  ~ChildProcess() {
    close_stdin();
    if (stdout_ >= 0) close(stdout_);
    if (pid_ > 0 && !reaped_) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
    }
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  void write_line(const std::string& line) {
    std::string data = line + "\n";
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
      const ssize_t n = ::write(stdin_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TraineeCrashed("trainee closed its input before the request was sent");
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  void close_stdin() {
    if (stdin_ >= 0) {
      close(stdin_);
      stdin_ = -1;
    }
  }

  /// Next stdout line, or nullopt on EOF. Throws TraineeTimeout.
  std::optional<std::string> read_line(Clock::time_point deadline) {
    for (;;) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        return line;
      }
      if (eof_) {
        if (buffer_.empty()) return std::nullopt;
        std::string line;
        line.swap(buffer_);
        return line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (remaining.count() <= 0) throw TraineeTimeout("trainee did not finish within the timeout");
      pollfd pfd{stdout_, POLLIN, 0};
      const int rc = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1000)));
      if (rc < 0 && errno != EINTR) throw TraineeCrashed(std::string("poll: ") + std::strerror(errno));
      if (rc <= 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(stdout_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TraineeCrashed(std::string("read: ") + std::strerror(errno));
      }
      if (n == 0) {
        eof_ = true;
      } else {
        buffer_.append(chunk, static_cast<std::size_t>(n));
      }
    }
  }

  /// Waits for exit; kills the child if it lingers past `grace`.
  int wait_exit(std::chrono::milliseconds grace) {
    const auto deadline = Clock::now() + grace;
    int status = 0;
    for (;;) {
      const pid_t r = waitpid(pid_, &status, WNOHANG);
      if (r == pid_) break;
      if (Clock::now() >= deadline) {
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        break;
      }
      usleep(2000);
    }
    reaped_ = true;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
  }

 private:
  pid_t pid_ = -1;
  int stdin_ = -1;
  int stdout_ = -1;
  std::string buffer_;
  bool eof_ = false;
  bool reaped_ = false;
};

}  // namespace

std::string ExternalTrainee::name() const {
  std::string s;
  for (const auto& part : command_) s += (s.empty() ? "" : " ") + part;
  return s;
}

TrainOutcome run_external_trainee(const std::vector<std::string>& command,
                                  const TrainRequest& req, double timeout_s) {
  static const bool sigpipe_ignored = [] {
    signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;

  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_s));
  ChildProcess child(command);

  auto crashed = [&](const std::string& what) {
    child.close_stdin();
    const int code = child.wait_exit(std::chrono::milliseconds(500));
    return TraineeCrashed(what + " (exit status " + std::to_string(code) + ")");
  };

  auto first = child.read_line(deadline);
  if (!first) throw crashed("trainee exited before announcing capabilities");
  const json caps_msg = protocol::parse_line(*first, 1);
  if (caps_msg.at("type") == "error")
    throw TraineeCrashed("trainee reported error: " + caps_msg.value("message", std::string("(no message)")));
  const Capabilities caps = protocol::parse_capabilities(caps_msg);

  TrainRequest sent = req;
  auto notes = protocol::negotiate(caps, sent);
  child.write_line(protocol::train_message(sent).dump());

  protocol::TrainingStream stream(1);
  for (;;) {
    auto line = child.read_line(deadline);
    if (!line) throw crashed("trainee exited before sending a result");
    if (stream.feed(*line)) break;
  }
  child.close_stdin();
  child.wait_exit(std::chrono::milliseconds(2000));

  TrainOutcome out = stream.outcome();
  out.notes = std::move(notes);
  return out;
}

}  // namespace rulebo
