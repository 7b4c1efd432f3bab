#pragma once

#include <stdexcept>
#include <string>

namespace hmfrac {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Factorization breakdown: asymmetry, indefiniteness or singularity.
class FactorizationError : public Error {
public:
    using Error::Error;
};

/// Iterative solver produced a non-finite value or an unusable configuration.
class SolverError : public Error {
public:
    using Error::Error;
};

class MeshError : public Error {
public:
    using Error::Error;
};

/// Text input could not be parsed; carries the offending line when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_ = 0;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace hmfrac
