#pragma once

#include <string>

namespace niaudit {

/// Log level from NI_AUDIT_LOG (quiet, info or debug; default quiet).
/// Messages go to stderr.
void log_info(const std::string& message);
void log_debug(const std::string& message);
void log_warn(const std::string& message);

}  // namespace niaudit
