#include "wese/log.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace wese::log {

namespace {

Level initial_threshold() {
  const char* env = std::getenv("WESE_LOG");
  if (env == nullptr) return Level::Warn;
  if (std::strcmp(env, "debug") == 0) return Level::Debug;
  if (std::strcmp(env, "info") == 0) return Level::Info;
  if (std::strcmp(env, "warn") == 0) return Level::Warn;
  if (std::strcmp(env, "error") == 0) return Level::Error;
  if (std::strcmp(env, "off") == 0) return Level::Off;
  return Level::Warn;
}

std::atomic<Level>& threshold_ref() {
  static std::atomic<Level> level{initial_threshold()};
  return level;
}

const char* level_tag(Level level) {
  switch (level) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    default: return "?";
  }
}

}  // namespace

Level threshold() { return threshold_ref().load(std::memory_order_relaxed); }

void set_threshold(Level level) { threshold_ref().store(level, std::memory_order_relaxed); }

void write(Level level, const std::string& msg) {
  if (level < threshold()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[wese %s] %s\n", level_tag(level), msg.c_str());
}

}  // namespace wese::log
