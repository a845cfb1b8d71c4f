#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ethomap {

/// Runtime failure inside a pipeline stage (I/O, numerical breakdown).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input rejected before any work starts: bad parameters, malformed regions.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed record in one of the text input formats.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace ethomap
