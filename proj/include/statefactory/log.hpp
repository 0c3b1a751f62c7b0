#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace statefactory::log {

enum class Level { Info, Warn, Error };

using Sink = std::function<void(Level, std::string_view)>;

namespace detail {

struct State {
  std::mutex mu;
  Sink sink = [](Level lvl, std::string_view msg) {
    const char* tag = lvl == Level::Info ? "info" : lvl == Level::Warn ? "warn" : "error";
    std::cerr << "[statefactory:" << tag << "] " << msg << '\n';
  };
  Level threshold = Level::Warn;
};

inline State& state() {
  static State s;
  return s;
}

}  // namespace detail

// Replace the process-wide sink. Returns the previous one.
inline Sink set_sink(Sink sink) {
  auto& s = detail::state();
  std::lock_guard lock(s.mu);
  std::swap(s.sink, sink);
  return sink;
}

inline void set_threshold(Level lvl) {
  auto& s = detail::state();
  std::lock_guard lock(s.mu);
  s.threshold = lvl;
}

inline void write(Level lvl, std::string_view msg) {
  auto& s = detail::state();
  std::lock_guard lock(s.mu);
  if (static_cast<int>(lvl) < static_cast<int>(s.threshold) || !s.sink) return;
  s.sink(lvl, msg);
}

inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void warn(std::string_view msg) { write(Level::Warn, msg); }
inline void error(std::string_view msg) { write(Level::Error, msg); }

}  // namespace statefactory::log
