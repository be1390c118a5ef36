#ifndef MACKNET_ERRORS_HPP
#define MACKNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace macknet {

/// Malformed or inconsistent input data (bad CSV, missing company, shape
/// mismatch). Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A required upstream artifact (ingested triangle, simulation output) is
/// missing. Maps to CLI exit code 3.
class MissingArtifactError : public std::runtime_error {
public:
    explicit MissingArtifactError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: divergent training, zero denominators, non-finite
/// intermediates. Maps to CLI exit code 4.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace macknet

#endif
