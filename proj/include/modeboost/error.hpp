#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace modeboost {

enum class ErrorCode {
    EmptyInput,
    UnparseableTimestamp,
    GridTooShort,
    UnknownEntity,
    MissingColumn,
    MalformedRow,
    DegeneratePolygon,
    InvalidSpec,
    MalformedDate,
    InvalidConfig,
    InsufficientHistory,
    NoUsableRows,
    HorizonExceedsGrid,
    EmptyTraining,
    FeatureMismatch,
    DuplicateName,
    AlreadyTransformed,
    EmptyMatrix,
    LabelOutOfRange,
    NonFiniteFeature,
    WrongTask,
    IoFailure,
    VersionMismatch,
    CorruptFile,
    AllZeroTraining,
    LengthMismatch,
    TooFewSamples,
    AllZeroDifferences,
    NoTestRows,
    SingleEntity,
    EmptySpace,
    ObjectiveFailure,
    ClockUnavailable,
    UsageError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Domain error carrying a machine-checkable code. Every failure surfaced by
/// the library is one of these; the CLI maps them to exit status 1.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace modeboost
