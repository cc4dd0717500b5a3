#pragma once

#include <stdexcept>
#include <string>

namespace ergo {

enum class ErrorKind {
    Format,
    Sequence,
    Lookup,
    Parameter,
    InsufficientData,
    Ordering,
    Alignment,
    Grid,
    DegenerateGeometry,
    DegenerateInput,
    Domain,
    State,
    Diverged,
    Plot,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Domain error raised by endurance-time queries; `code` distinguishes a
/// load that never exhausts the muscle from one that is infeasible at t = 0.
class DomainError : public Error {
public:
    enum class Code { NeverReached, AlreadyInfeasible, NegativeLoad };

    DomainError(Code code, const std::string& message)
        : Error(ErrorKind::Domain, message), code_(code) {}

    Code code() const noexcept { return code_; }

private:
    Code code_;
};

}  // namespace ergo
