#pragma once

#include <stdexcept>
#include <string>

namespace subdiff {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorClass { config = 1, io = 2, numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

// Numeric failures
class DomainError : public Error {
public:
    explicit DomainError(const std::string& w) : Error(ErrorClass::numeric, w) {}
};

class OverflowError : public Error {
public:
    explicit OverflowError(const std::string& w) : Error(ErrorClass::numeric, w) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& w) : Error(ErrorClass::numeric, w) {}
};

class SymmetryError : public Error {
public:
    explicit SymmetryError(const std::string& w) : Error(ErrorClass::numeric, w) {}
};

class PositivityError : public Error {
public:
    explicit PositivityError(const std::string& w) : Error(ErrorClass::numeric, w) {}
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& w) : Error(ErrorClass::numeric, w) {}
};

class AmplificationOverflow : public Error {
public:
    explicit AmplificationOverflow(const std::string& w) : Error(ErrorClass::numeric, w) {}
};

class CancellationError : public Error {
public:
    explicit CancellationError(const std::string& w) : Error(ErrorClass::numeric, w) {}
};

// Orchestration failures
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& w) : Error(ErrorClass::config, w) {}
};

class IOError : public Error {
public:
    explicit IOError(const std::string& w) : Error(ErrorClass::io, w) {}
};

} // namespace subdiff
