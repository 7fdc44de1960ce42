#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <sstream>

namespace velinv::log {

inline std::atomic<int>& verbosity() {
  static std::atomic<int> level{1};
  return level;
}

template <typename... Args>
void info(Args&&... args) {
  if (verbosity().load() < 1) return;
  static std::mutex mu;
  std::ostringstream os;
  (os << ... << args);
  std::lock_guard<std::mutex> lock(mu);
  std::clog << "[velinv] " << os.str() << '\n';
}

template <typename... Args>
void debug(Args&&... args) {
  if (verbosity().load() < 2) return;
  info(std::forward<Args>(args)...);
}

}  // namespace velinv::log
