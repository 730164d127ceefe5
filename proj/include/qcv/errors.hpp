#pragma once

#include <stdexcept>
#include <string>

namespace qcv {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid parameters or configuration (caller bug, exit code 2 in the CLI).
class InvalidParams : public Error {
public:
    explicit InvalidParams(const std::string& msg) : Error(msg) {}
};

/// Input data is unusable (too short, unparsable, non-finite entries).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Numeric failure: quadrature non-convergence, bracketing failure,
/// non-monotone table grid.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// Data-dependent estimator failure (degenerate window, dropped grid points).
/// A NumericError so harness code can count both under one catch.
class EstimationError : public NumericError {
public:
    explicit EstimationError(const std::string& msg) : NumericError(msg) {}
};

} // namespace qcv
