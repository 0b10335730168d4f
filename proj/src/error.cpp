#include "osnids/error.hpp"

namespace osnids {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedHeader: return "TruncatedHeader";
    case ErrorCode::UnsupportedLinkType: return "UnsupportedLinkType";
    case ErrorCode::BadCsv: return "BadCsv";
    case ErrorCode::EmptyFlowTable: return "EmptyFlowTable";
    case ErrorCode::NoAttackSamples: return "NoAttackSamples";
    case ErrorCode::WrongLength: return "WrongLength";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::PerplexityTooLarge: return "PerplexityTooLarge";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownHeldoutClass: return "UnknownHeldoutClass";
    case ErrorCode::NoKnownAttacks: return "NoKnownAttacks";
    case ErrorCode::EmptyBenign: return "EmptyBenign";
    case ErrorCode::InvalidSplitSpec: return "InvalidSplitSpec";
    case ErrorCode::DegenerateClasses: return "DegenerateClasses";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::MissingCluster: return "MissingCluster";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::UntrainedEnsemble: return "UntrainedEnsemble";
    case ErrorCode::SingleClassLabels: return "SingleClassLabels";
    case ErrorCode::WrongArity: return "WrongArity";
    case ErrorCode::UntrainedModel: return "UntrainedModel";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::SeparationUnsatisfiable: return "SeparationUnsatisfiable";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::ManifestInvalid: return "ManifestInvalid";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
    switch (code) {
    case ErrorCode::ConfigInvalid:
        return ErrorCategory::Usage;
    case ErrorCode::UnreadableFile:
    case ErrorCode::IoFailure:
        return ErrorCategory::Io;
    case ErrorCode::DegenerateClasses:
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::MissingCluster:
    case ErrorCode::SingleClassLabels:
    case ErrorCode::UntrainedEnsemble:
    case ErrorCode::UntrainedModel:
        return ErrorCategory::Training;
    default:
        return ErrorCategory::DataValidation;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

} // namespace osnids
