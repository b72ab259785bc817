#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pollen {

enum class ErrorKind {
    InvalidArgument,
    IoError,
    MissingColumn,
    GapTooLarge,
    NonFinite,
    NonMonotoneDates,
    InvariantViolation,
    InsufficientData,
    TooFewSeasons,
    WrongWindowLength,
    DatasetTooShort,
    IndexOutOfRange,
    TooFewRows,
    WrongFeatureCount,
    LengthMismatch,
    MissingLabel,
    HorizonOutOfRange,
    TooFewYears,
    WindowUnavailable,
    TooFewPoints,
    DegenerateDesign,
    NonPositiveWeight,
    DegenerateSlope,
    ZeroSlope,
    Empty,
    FoldConfigInvalid,
    FormatError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace pollen
