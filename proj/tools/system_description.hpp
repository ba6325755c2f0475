#pragma once

#include "niaudit/free_motion.hpp"
#include "niaudit/lti.hpp"
#include "niaudit/nonlinear.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace niaudit::cli {

enum class SystemKind { Lti, Builtin, CascadeIntegrator };

/// Parsed system file. Grammar in docs/system-format.md.
struct SystemDescription {
    SystemKind kind = SystemKind::Lti;
    std::string name;  // builtin and cascade_integrator only
    Matrix a, b, c, d;  // lti only; d defaults to zeros
    std::map<std::string, double> params;

    bool operator==(const SystemDescription&) const = default;
};

/// Throws Error(ParseError) with the line number on malformed input and
/// Error(DimensionMismatch) when the LTI blocks do not fit together.
[[nodiscard]] SystemDescription parse_description(std::istream& in);
[[nodiscard]] SystemDescription parse_description(const std::string& text);
[[nodiscard]] SystemDescription load_description(const std::string& path);

/// Canonical text form; parse_description(serialize(d)) == d.
[[nodiscard]] std::string serialize(const SystemDescription& desc);

/// A loaded system with whatever structure the analyses can use.
struct ResolvedSystem {
    NonlinearSystem system;
    std::optional<StorageFunction> storage;  // known storage, when there is one
    std::optional<AffineSystem> affine;
    std::optional<CascadeIntegratorSystem> cascade;
    std::optional<StateSpace> lti;
};

/// Builds the system; unknown names and parameters are ParseErrors. LTI
/// storages are left empty (the commands search for them).
[[nodiscard]] ResolvedSystem resolve(const SystemDescription& desc);

}  // namespace niaudit::cli
