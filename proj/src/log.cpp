#include "rulebo/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>

namespace rulebo::log {

namespace {

Level from_env() {
  const char* v = std::getenv("RULEBO_LOG");
  if (v == nullptr) return Level::warn;
  const std::string s(v);
  if (s == "quiet") return Level::quiet;
  if (s == "error") return Level::error;
  if (s == "info") return Level::info;
  if (s == "debug") return Level::debug;
  return Level::warn;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

constexpr const char* kTags[] = {"", "error", "warn", "info", "debug"};

}  // namespace

Level threshold() { return static_cast<Level>(current().load()); }

void set_threshold(Level level) { current().store(static_cast<int>(level)); }

void write(Level level, std::string_view message) {
  if (level == Level::quiet || static_cast<int>(level) > current().load()) return;
  std::cerr << "[rulebo " << kTags[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace rulebo::log
