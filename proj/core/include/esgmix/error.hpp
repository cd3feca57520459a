#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace esgmix {

/// Broad failure class. Each maps onto one CLI exit code.
enum class ErrorKind {
    config,   // exit 1
    backend,  // exit 2
    data,     // exit 3
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// Bad input data. `line` is 1-based when the failure is tied to a record, 0 otherwise.
class DataError : public Error {
public:
    explicit DataError(const std::string& what, std::size_t line = 0)
        : Error(ErrorKind::data, line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A caller violated an operation's precondition (wrong capability, bad fraction, ...).
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class BackendError : public Error {
public:
    enum class Reason { timeout, status, transport, retries_exhausted, protocol, missing_entry };

    BackendError(Reason reason, std::string backend, const std::string& what)
        : Error(ErrorKind::backend, backend + ": " + what), reason_(reason), backend_(std::move(backend)) {}

    Reason reason() const noexcept { return reason_; }
    const std::string& backend() const noexcept { return backend_; }

private:
    Reason reason_;
    std::string backend_;
};

inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::config: return 1;
    case ErrorKind::backend: return 2;
    case ErrorKind::data: return 3;
    }
    return 3;
}

} // namespace esgmix
