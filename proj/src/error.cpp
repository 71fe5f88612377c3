#include "modeboost/error.hpp"

namespace modeboost {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::UnparseableTimestamp: return "UnparseableTimestamp";
        case ErrorCode::GridTooShort: return "GridTooShort";
        case ErrorCode::UnknownEntity: return "UnknownEntity";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::MalformedDate: return "MalformedDate";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InsufficientHistory: return "InsufficientHistory";
        case ErrorCode::NoUsableRows: return "NoUsableRows";
        case ErrorCode::HorizonExceedsGrid: return "HorizonExceedsGrid";
        case ErrorCode::EmptyTraining: return "EmptyTraining";
        case ErrorCode::FeatureMismatch: return "FeatureMismatch";
        case ErrorCode::DuplicateName: return "DuplicateName";
        case ErrorCode::AlreadyTransformed: return "AlreadyTransformed";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
        case ErrorCode::WrongTask: return "WrongTask";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::AllZeroTraining: return "AllZeroTraining";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::AllZeroDifferences: return "AllZeroDifferences";
        case ErrorCode::NoTestRows: return "NoTestRows";
        case ErrorCode::SingleEntity: return "SingleEntity";
        case ErrorCode::EmptySpace: return "EmptySpace";
        case ErrorCode::ObjectiveFailure: return "ObjectiveFailure";
        case ErrorCode::ClockUnavailable: return "ClockUnavailable";
        case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

}  // namespace modeboost
