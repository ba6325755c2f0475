#pragma once

#include "system_description.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace niaudit::cli {

enum ExitCode : int { kPassed = 0, kRefuted = 1, kInputError = 2, kNumericalFailure = 3 };

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;  // grids only
};

/// "a:b:n" with a < b and n >= 2. Throws Error(ParseError).
[[nodiscard]] Range parse_grid(const std::string& text);
/// "a:b" with a < b. Throws Error(ParseError).
[[nodiscard]] Range parse_box(const std::string& text);

/// Flags shared by every command; unset optionals take per-command defaults.
struct RunConfig {
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    std::optional<double> tol;
    std::optional<Range> grid;
    std::optional<Range> box;
    std::optional<double> horizon;
    std::optional<double> dt;
    unsigned threads = 0;
};

/// Report text plus named output files; nothing is written by the commands.
struct CommandResult {
    int exit_code = kPassed;
    std::string report;
    std::map<std::string, std::string> files;
};

[[nodiscard]] CommandResult cmd_verify_lti(const SystemDescription& desc, const std::string& property,
                                           const RunConfig& config);
[[nodiscard]] CommandResult cmd_verify_nni(const SystemDescription& desc, const RunConfig& config);

struct AuditFlags {
    std::size_t n_ics = 20;
    double margin = 0.01;
    std::size_t n_samples = 10000;
};

[[nodiscard]] CommandResult cmd_audit_interconnection(const SystemDescription& plant,
                                                      const SystemDescription& controller, const AuditFlags& flags,
                                                      const RunConfig& config);

[[nodiscard]] CommandResult cmd_free_motion(const SystemDescription& desc, std::size_t n_samples,
                                            const RunConfig& config);

struct DemoFlags {
    double gamma = 1.0;
    double phi = 2.0;
    std::size_t n_ics = 20;
    std::size_t n_samples = 10000;
};

[[nodiscard]] CommandResult cmd_msd_demo(const DemoFlags& flags, const RunConfig& config);

/// Closed-form MSD/IRC sector data, or the numerical chain scan when both
/// descriptions are given.
[[nodiscard]] CommandResult cmd_sector_scan(const std::optional<SystemDescription>& plant,
                                            const std::optional<SystemDescription>& controller, double phi, double k,
                                            const RunConfig& config);

struct SimulateFlags {
    std::string input = "zero";  // zero, step or sine
    double amplitude = 1.0;
    double omega = 1.0;
    std::string x0;  // comma-separated, zeros when empty
};

[[nodiscard]] CommandResult cmd_simulate(const SystemDescription& desc, const SimulateFlags& flags,
                                         const RunConfig& config);

/// Parses argv, runs the command, writes its files under --out and the
/// report to `out`. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace niaudit::cli
