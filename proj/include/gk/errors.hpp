#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on the inputs was violated (shape, range, symmetry).
class ContractError : public Error
{
public:
    using Error::Error;
};

/// Bad configuration values (fold counts, grids, unknown keys).
class ConfigError : public Error
{
public:
    using Error::Error;
};

/// A file or field could not be parsed.
class InputError : public Error
{
public:
    using Error::Error;
};

/// Generic numerical failure.
class NumericError : public Error
{
public:
    using Error::Error;
};

class NotPsdError : public NumericError
{
public:
    using NumericError::NumericError;
};

/// Raised when a covariance needs a ridge/jitter before it can be inverted.
class SingularMatrixError : public NumericError
{
public:
    using NumericError::NumericError;
};

class InvalidSummaryError : public NumericError
{
public:
    using NumericError::NumericError;
};

class DegenerateFitError : public NumericError
{
public:
    using NumericError::NumericError;
};

/// Not enough data to estimate a quantity (e.g. too few shared variants).
class EstimationError : public NumericError
{
public:
    using NumericError::NumericError;
};

/// Iterative method hit its cap. Carries the last iterate so callers can
/// inspect or reuse it.
class NonConvergenceError : public NumericError
{
public:
    NonConvergenceError(const std::string& what, std::vector<double> last)
        : NumericError(what), last_iterate_(std::move(last))
    {}

    const std::vector<double>& last_iterate() const { return last_iterate_; }

private:
    std::vector<double> last_iterate_;
};

} // namespace gk
