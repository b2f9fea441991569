#pragma once

#include <stdexcept>
#include <string>

namespace mpimux {

/// Malformed or unreadable input: trace files, scenario files, CLI values.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A request that would violate a resource constraint: budget floors,
/// cluster capacity, namespace quotas, model-validity bounds.
struct ConstraintError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mpimux
