#pragma once

#include <stdexcept>
#include <string>

namespace lexquad {

/// Failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
    Usage = 1,
    Data = 2,
    External = 3,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Bad flags, bad configuration, violated preconditions on arguments.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

/// Malformed or inconsistent input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// A record-level parse failure with its 1-based line number.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Lookup of an embedding key or quadruple id that is not present.
class MissingKeyError : public DataError {
public:
    MissingKeyError(std::string key, const std::string& what)
        : DataError(what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Remote service failed (transport, exhausted retries, non-2xx).
class ExternalError : public Error {
public:
    explicit ExternalError(const std::string& what) : Error(ErrorKind::External, what) {}
};

}  // namespace lexquad
