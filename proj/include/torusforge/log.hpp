#pragma once

#include <string>

namespace torusforge {

// Diagnostic verbosity: trace, debug, info, warn, error or off. The initial level comes from the
// TORUSFORGE_LOG environment variable (default warn).
void set_log_level(const std::string& level);

}  // namespace torusforge
