#pragma once

#include <stdexcept>
#include <string>

namespace sb {

/// A numeric precondition of an operation was violated (bad dimensions,
/// learning rate above its cap, delta outside (0,1), ...).
class ConstraintError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A sampler or estimator ran but its diagnostics say the output cannot be
/// trusted (acceptance rate out of band, non-finite risk, no convergence).
class DiagnosticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document or argument (unknown key, unparsable value).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace sb
