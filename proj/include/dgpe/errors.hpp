#pragma once

#include <stdexcept>
#include <string>

namespace dgpe {

/// Bad input: shapes, parameters, preconditions. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The numerics failed: non-finite state, quadrature that did not converge.
/// The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-fatal diagnostics go to stderr with a "[W]" prefix unless silenced.
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace dgpe
