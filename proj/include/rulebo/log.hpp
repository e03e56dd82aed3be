#pragma once

#include <string_view>

namespace rulebo::log {

enum class Level { quiet = 0, error = 1, warn = 2, info = 3, debug = 4 };

/// Threshold read once from RULEBO_LOG ("quiet", "error", "warn", "info",
/// "debug"); defaults to warn.
Level threshold();
void set_threshold(Level level);

void write(Level level, std::string_view message);

inline void error(std::string_view m) { write(Level::error, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void debug(std::string_view m) { write(Level::debug, m); }

}  // namespace rulebo::log
