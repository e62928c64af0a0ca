#pragma once

#include <stdexcept>
#include <string>

namespace timbre {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (config files, bad parameter values).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent data (bad manifests, dimension mismatches, empty inputs).
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace timbre
