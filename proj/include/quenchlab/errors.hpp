#pragma once

#include <stdexcept>
#include <string>

namespace quenchlab {

/// Invalid or inconsistent user-supplied parameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A time step produced growth the scheme cannot account for.
class StabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The analytic tail of the Meier integral does not converge (alpha <= 2).
class TailDivergent : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation requested for a flow kind it does not support.
class Unsupported : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace quenchlab
