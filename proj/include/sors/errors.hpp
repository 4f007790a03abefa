#pragma once

#include <stdexcept>
#include <string>

namespace sors {

/// A violated precondition or invariant: a caller bug, not a runtime condition.
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

/// Input is well-formed but outside what the implementation handles
/// (nondeterministic dynamics, continuous features where finite ones are required).
struct UnsupportedError : std::runtime_error {
    explicit UnsupportedError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An enumeration exceeded its configured cap.
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Every stored return ties with every other; no ordering information available.
struct NoRankablePairs : std::runtime_error {
    explicit NoRankablePairs(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value where finite math is required; signals divergence upstream.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Problem in a config or spec file; message carries key and line context.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sors
