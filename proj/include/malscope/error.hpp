#pragma once

#include <stdexcept>
#include <string>

namespace malscope {

/// Broad failure categories; the CLI maps each one to its own exit code.
enum class ErrorKind {
    Input,    // malformed or missing input files
    Data,     // input is well-formed but violates a domain invariant or precondition
    Config,   // bad configuration or arguments
    Network,  // remote endpoint failure
    Numeric,  // divergence / non-finite values during fitting
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse failure pinned to a 1-based input line and a field name.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& field, const std::string& detail)
        : Error(ErrorKind::Input,
                "line " + std::to_string(line) + ", field '" + field + "': " + detail),
          line_(line), field_(field) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

inline Error data_error(const std::string& what) { return Error(ErrorKind::Data, what); }
inline Error config_error(const std::string& what) { return Error(ErrorKind::Config, what); }

}  // namespace malscope
