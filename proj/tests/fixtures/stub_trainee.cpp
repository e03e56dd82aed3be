// Scriptable protocol v1 trainee used by the tests.
//
//   stub_trainee [--mode M] [--no-bn] [--epochs-override N] [--log FILE]
//   stub_trainee --transcript FILE
//
// Modes: normal, nan, inf, crash, sleep, malformed, error, skip-epoch,
// no-result, bad-version.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace {

void send(const std::string& line) {
  std::cout << line << '\n' << std::flush;
}

int replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open transcript " << path << '\n';
    return 4;
  }
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.size() < 2 || line[0] == '#') continue;
    const std::string body = line.substr(2);
    if (line[0] == '<') {
      send(body);
    } else if (line[0] == '>') {
      std::string got;
      if (!std::getline(std::cin, got)) {
        std::cerr << "transcript line " << n << ": expected a message, got EOF\n";
        return 5;
      }
      if (json::parse(got, nullptr, false) != json::parse(body, nullptr, false)) {
        std::cerr << "transcript line " << n << ": expected " << body << " got " << got << '\n';
        return 5;
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::string mode = "normal";
  std::string log_path;
  bool bn = true;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--mode" && i + 1 < argc) mode = argv[++i];
    else if (a == "--no-bn") bn = false;
    else if (a == "--log" && i + 1 < argc) log_path = argv[++i];
    else if (a == "--transcript" && i + 1 < argc) return replay(argv[++i]);
  }

  json directives = json::array({"l2_regularization"});
  if (bn) directives.push_back("batch_normalization");
  send(json{{"type", "capabilities"}, {"version", mode == "bad-version" ? 2 : 1},
            {"directives", directives}, {"name", "stub"}}.dump());

  std::string line;
  if (!std::getline(std::cin, line)) return 0;
  const json req = json::parse(line, nullptr, false);
  if (req.is_discarded() || req.value("type", "") != "train") {
    send(json{{"type", "error"}, {"message", "expected a train request"}}.dump());
    return 1;
  }
  if (!log_path.empty()) {
    std::ofstream log(log_path, std::ios::app);
    log << req.dump() << '\n';
  }
  const int epochs = req.value("epochs", 1);

  if (mode == "sleep") {
    std::this_thread::sleep_for(std::chrono::seconds(30));
    return 0;
  }
  if (mode == "error") {
    send(json{{"type", "error"}, {"message", "out of memory"}}.dump());
    return 1;
  }
  if (mode == "malformed") {
    send("{\"type\": \"epoch\", \"epoch\": 0,");
    return 0;
  }

  double last_val = 0.0, last_acc = 0.0;
  for (int e = 0; e < epochs; ++e) {
    if (mode == "skip-epoch" && e == 1) continue;
    if (mode == "crash" && e == 1) return 3;
    const double train_loss = 2.0 / (1.0 + e);
    const double val_loss = 2.2 / (1.0 + e);
    const double train_acc = 1.0 - 0.5 / (1.0 + e);
    const double val_acc = 1.0 - 0.6 / (1.0 + e);
    if (mode == "nan" && e == 1) {
      send("{\"type\":\"epoch\",\"epoch\":1,\"train_loss\":NaN,\"val_loss\":1,\"train_acc\":0.5,\"val_acc\":0.5}");
      return 0;
    }
    if (mode == "inf" && e == 1) {
      send("{\"type\":\"epoch\",\"epoch\":1,\"train_loss\":1e999,\"val_loss\":1,\"train_acc\":0.5,\"val_acc\":0.5}");
      return 0;
    }
    send(json{{"type", "epoch"}, {"epoch", e}, {"train_loss", train_loss}, {"val_loss", val_loss},
              {"train_acc", train_acc}, {"val_acc", val_acc}}.dump());
    last_val = val_loss;
    last_acc = val_acc;
  }
  if (mode == "no-result") return 0;
  send(json{{"type", "result"}, {"objective", last_val}, {"final_val_loss", last_val},
            {"final_val_acc", last_acc}}.dump());
  return 0;
}
