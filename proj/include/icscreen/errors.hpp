#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace icscreen {

/// Error raised by the strict file readers. Always carries the source name
/// and the 1-based line number of the offending input.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::size_t line, const std::string& message)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + message),
          source_(std::move(source)),
          line_(line) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

} // namespace icscreen
