#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fracpod {

enum class ErrorKind {
    InvalidParameter,
    LengthMismatch,
    SingularSystem,
    DomainError,
    DivisionByZero,
    SpaceMismatch,
    OutsideDomain,
    EmptyInput,
    RankExceeded,
    NonSymmetric,
    FactorizationFailure,
    Io,
    Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-checkable error category.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    /// Message without the kind prefix.
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) {
        fail(kind, what);
    }
}

}  // namespace fracpod
