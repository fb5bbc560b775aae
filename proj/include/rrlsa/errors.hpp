#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rrlsa {

enum class ErrorKind {
    NonErgodicChain,
    SingularSystem,
    NotHurwitz,
    InconsistentDims,
    CenteringViolation,
    NumericalDivergence,
    TruncationFailure,
    InsufficientGrid,
    InvalidArgument,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NonErgodicChain: return "NonErgodicChain";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NotHurwitz: return "NotHurwitz";
    case ErrorKind::InconsistentDims: return "InconsistentDims";
    case ErrorKind::CenteringViolation: return "CenteringViolation";
    case ErrorKind::NumericalDivergence: return "NumericalDivergence";
    case ErrorKind::TruncationFailure: return "TruncationFailure";
    case ErrorKind::InsufficientGrid: return "InsufficientGrid";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Base exception for every failure raised by the library. The kind is the
/// stable, scriptable part; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised when an iterate norm blows past the divergence ceiling.
class DivergenceError : public Error {
public:
    DivergenceError(std::int64_t step, double norm)
        : Error(ErrorKind::NumericalDivergence,
                "iterate norm " + std::to_string(norm) + " exceeded limit at step " +
                    std::to_string(step)),
          step_(step) {}

    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

}  // namespace rrlsa
