#include "oceanfc/error.hpp"

namespace oceanfc {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::PolarRow: return "PolarRow";
        case ErrorCode::DegenerateGrid: return "DegenerateGrid";
        case ErrorCode::OutOfDomain: return "OutOfDomain";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::FormatViolation: return "FormatViolation";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::BadBoundary: return "BadBoundary";
        case ErrorCode::SpecMismatch: return "SpecMismatch";
        case ErrorCode::NonPositiveLead: return "NonPositiveLead";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::EmptyManifest: return "EmptyManifest";
        case ErrorCode::CflViolation: return "CflViolation";
        case ErrorCode::ConfigIncompatible: return "ConfigIncompatible";
        case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
        case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCode::Divergence: return "Divergence";
        case ErrorCode::BadHorizon: return "BadHorizon";
        case ErrorCode::MissingForcing: return "MissingForcing";
        case ErrorCode::MissingInputDay: return "MissingInputDay";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::PairMismatch: return "PairMismatch";
        case ErrorCode::TooFewSnapshots: return "TooFewSnapshots";
        case ErrorCode::NoValidStencil: return "NoValidStencil";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace oceanfc
