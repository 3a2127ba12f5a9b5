#include "crydet/log.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <mutex>

#include "crydet/errors.hpp"

namespace crydet::logging {

namespace {
std::atomic<int> g_level{static_cast<int>(Level::kInfo)};
std::mutex g_mutex;

const char* tag(Level lvl) {
  switch (lvl) {
    case Level::kError:
      return "error";
    case Level::kWarn:
      return "warn";
    case Level::kInfo:
      return "info";
    case Level::kDebug:
      return "debug";
  }
  return "?";
}
}  // namespace

Level level() { return static_cast<Level>(g_level.load()); }

void set_level(Level lvl) { g_level.store(static_cast<int>(lvl)); }

void set_level(const std::string& name) {
  if (name == "error") {
    set_level(Level::kError);
  } else if (name == "warn") {
    set_level(Level::kWarn);
  } else if (name == "info") {
    set_level(Level::kInfo);
  } else if (name == "debug") {
    set_level(Level::kDebug);
  } else {
    throw ConfigError("unknown log level: " + name);
  }
}

void write(Level lvl, const std::string& msg) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm_buf{};
#if defined(_WIN32)
  localtime_s(&tm_buf, &t);
#else
  localtime_r(&t, &tm_buf);
#endif
  char stamp[16];
  std::strftime(stamp, sizeof(stamp), "%H:%M:%S", &tm_buf);

  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "[%s] [%s] %s\n", stamp, tag(lvl), msg.c_str());
}

}  // namespace crydet::logging
