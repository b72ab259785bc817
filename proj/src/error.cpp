#include "pollen/error.hpp"

namespace pollen {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::GapTooLarge: return "GapTooLarge";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonMonotoneDates: return "NonMonotoneDates";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::TooFewSeasons: return "TooFewSeasons";
    case ErrorKind::WrongWindowLength: return "WrongWindowLength";
    case ErrorKind::DatasetTooShort: return "DatasetTooShort";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::WrongFeatureCount: return "WrongFeatureCount";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::MissingLabel: return "MissingLabel";
    case ErrorKind::HorizonOutOfRange: return "HorizonOutOfRange";
    case ErrorKind::TooFewYears: return "TooFewYears";
    case ErrorKind::WindowUnavailable: return "WindowUnavailable";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::DegenerateDesign: return "DegenerateDesign";
    case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::DegenerateSlope: return "DegenerateSlope";
    case ErrorKind::ZeroSlope: return "ZeroSlope";
    case ErrorKind::Empty: return "Empty";
    case ErrorKind::FoldConfigInvalid: return "FoldConfigInvalid";
    case ErrorKind::FormatError: return "FormatError";
    }
    return "Unknown";
}

} // namespace pollen
