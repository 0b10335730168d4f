#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace osnids {

enum class ErrorCode {
    // capture-ingest
    UnreadableFile,
    BadMagic,
    TruncatedHeader,
    UnsupportedLinkType,
    BadCsv,
    EmptyFlowTable,
    NoAttackSamples,
    // feature-transform
    WrongLength,
    ValueOutOfRange,
    // benign-clustering
    PerplexityTooLarge,
    NonFiniteInput,
    TooFewPoints,
    SingleCluster,
    InvalidRange,
    LengthMismatch,
    // dataset-splits
    UnknownHeldoutClass,
    NoKnownAttacks,
    EmptyBenign,
    InvalidSplitSpec,
    // learners
    DegenerateClasses,
    NonFiniteLoss,
    MissingCluster,
    GeometryMismatch,
    UntrainedEnsemble,
    // meta-ensemble
    SingleClassLabels,
    WrongArity,
    UntrainedModel,
    // evaluation
    EmptyDataset,
    SeparationUnsatisfiable,
    // persistence-cli
    IoFailure,
    VersionUnsupported,
    CountMismatch,
    ManifestInvalid,
    ChecksumMismatch,
    ConfigInvalid,
};

/// Coarse grouping used to pick a process exit code.
enum class ErrorCategory { Usage = 1, Io = 2, DataValidation = 3, Training = 4 };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

} // namespace osnids
