#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace camnet {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wire payload of the wrong length.
class MalformedFrame : public Error {
public:
    using Error::Error;
};

/// A decoded or constructed field lies outside its valid domain.
class InvalidField : public Error {
public:
    InvalidField(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Log line with the wrong shape (column count, header).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Log column that does not parse as the expected value.
class ValueError : public Error {
public:
    ValueError(std::string column, const std::string& what)
        : Error(column + ": " + what), column_(std::move(column)) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

/// Query outside the span covered by a trace or log.
class OutOfRange : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Log join found duplicate keys inside one boot session.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// A node tried to log reception of its own broadcast.
class SelfReception : public Error {
public:
    using Error::Error;
};

/// Scenario or configuration that cannot run; carries every violation found.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }
    std::vector<std::string> violations_;
};

/// File-level parse failure annotated with path and line number.
class ParseError : public Error {
public:
    ParseError(std::string path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what),
          path_(std::move(path)),
          line_(line) {}
    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

} // namespace camnet
