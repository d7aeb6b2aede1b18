#include "log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <cstdlib>

#include "torusforge/log.hpp"

namespace torusforge {

namespace detail {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("torusforge");
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("TORUSFORGE_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return *instance;
}

}  // namespace detail

void set_log_level(const std::string& level) {
  detail::logger().set_level(spdlog::level::from_str(level));
}

}  // namespace torusforge
