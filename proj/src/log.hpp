#pragma once

#include <spdlog/spdlog.h>

namespace torusforge::detail {

spdlog::logger& logger();

}  // namespace torusforge::detail
