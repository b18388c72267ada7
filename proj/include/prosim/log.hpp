#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace prosim {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

namespace detail {
inline std::atomic<LogLevel>& log_threshold() {
  static std::atomic<LogLevel> level{LogLevel::Warn};
  return level;
}
inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

inline void set_log_level(LogLevel level) noexcept { detail::log_threshold().store(level); }
inline LogLevel log_level() noexcept { return detail::log_threshold().load(); }

inline void log(LogLevel level, std::string_view message) {
  if (level < log_level()) return;
  static constexpr std::string_view tags[] = {"debug", "info", "warning", "error"};
  std::lock_guard lock(detail::log_mutex());
  std::clog << "[prosim] " << tags[static_cast<int>(level)] << ": " << message << '\n';
}

inline void log_warning(std::string_view message) { log(LogLevel::Warn, message); }
inline void log_debug(std::string_view message) { log(LogLevel::Debug, message); }

}  // namespace prosim
