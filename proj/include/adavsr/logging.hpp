#pragma once

#include <spdlog/spdlog.h>

namespace adavsr {

/// Configures the stderr logger. The level comes from ADAVSR_LOG_LEVEL
/// (trace, debug, info, warn, error, off); default is info.
void init_logging();

template <class... Args>
void log_info(fmt::format_string<Args...> fmt, Args&&... args) {
  spdlog::info(fmt, std::forward<Args>(args)...);
}

template <class... Args>
void log_warn(fmt::format_string<Args...> fmt, Args&&... args) {
  spdlog::warn(fmt, std::forward<Args>(args)...);
}

template <class... Args>
void log_error(fmt::format_string<Args...> fmt, Args&&... args) {
  spdlog::error(fmt, std::forward<Args>(args)...);
}

}  // namespace adavsr
