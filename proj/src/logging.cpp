#include "niaudit/logging.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string_view>

namespace niaudit {
namespace {

spdlog::logger& logger() {
    static const std::shared_ptr<spdlog::logger> instance = [] {
        auto l = spdlog::stderr_logger_mt("niaudit");
        l->set_pattern("[%l] %v");
        const char* env = std::getenv("NI_AUDIT_LOG");
        const std::string_view level = env ? env : "quiet";
        if (level == "debug") l->set_level(spdlog::level::debug);
        else if (level == "info") l->set_level(spdlog::level::info);
        else l->set_level(spdlog::level::off);
        return l;
    }();
    return *instance;
}

}  // namespace

void log_info(const std::string& message) { logger().info(message); }
void log_debug(const std::string& message) { logger().debug(message); }
void log_warn(const std::string& message) { logger().warn(message); }

}  // namespace niaudit
