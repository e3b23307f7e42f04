#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace idxf {

/// Malformed input file. Carries the 1-based line number when one applies (0 otherwise).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, int epoch)
        : std::runtime_error(what), epoch_(epoch) {}

    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

} // namespace idxf
