#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kcl {

enum class ErrorKind {
    InvalidSymbol,
    Model,
    CorruptStream,
    Domain,
    Limit,
    Syntax,
    Resource,
    Quality,
    TrainingDiverged,
    DegenerateTest,
    RankDeficiency,
    Io,
    Parse,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` carries the category.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by the expression parser; offset is a byte index into the input.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, const std::string& what)
        : Error(ErrorKind::Syntax, what + " at offset " + std::to_string(offset)),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace kcl
