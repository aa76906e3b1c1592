#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sophie {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input document. `offset` is the byte position reported by the
// JSON reader.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

struct Violation {
    std::optional<std::size_t> turn_index;
    std::string rule;
    std::string message;

    bool operator==(const Violation&) const = default;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

// Content (rule files, schemas, lexicons, config) failed to load. `line` is
// 1-based, 0 when the problem is not tied to a line.
class LoadError : public Error {
public:
    LoadError(std::string source, std::size_t line, const std::string& message);
    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string source_;
    std::size_t line_;
    std::string detail_;
};

// A metric has no defined value for the given input (e.g. zero words).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

// Operation not allowed in the current session state.
class StateError : public Error {
public:
    using Error::Error;
};

// Caller passed arguments that violate an operation's precondition.
class UsageError : public Error {
public:
    using Error::Error;
};

// A session, schema or report id that does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

std::string describe(const Violation& v);

} // namespace sophie
