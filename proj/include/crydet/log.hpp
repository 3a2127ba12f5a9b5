#pragma once

#include <sstream>
#include <string>

namespace crydet::logging {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

Level level();
void set_level(Level lvl);
// Accepts "error", "warn", "info", "debug"; throws ConfigError otherwise.
void set_level(const std::string& name);

void write(Level lvl, const std::string& msg);

}  // namespace crydet::logging

#define CRYDET_LOG(lvl, expr)                                        \
  do {                                                               \
    if (static_cast<int>(lvl) <=                                     \
        static_cast<int>(::crydet::logging::level())) {              \
      std::ostringstream crydet_log_oss_;                            \
      crydet_log_oss_ << expr;                                       \
      ::crydet::logging::write(lvl, crydet_log_oss_.str());          \
    }                                                                \
  } while (0)

#define LOG_ERROR(expr) CRYDET_LOG(::crydet::logging::Level::kError, expr)
#define LOG_WARN(expr) CRYDET_LOG(::crydet::logging::Level::kWarn, expr)
#define LOG_INFO(expr) CRYDET_LOG(::crydet::logging::Level::kInfo, expr)
#define LOG_DEBUG(expr) CRYDET_LOG(::crydet::logging::Level::kDebug, expr)
