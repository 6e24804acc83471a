#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oceanfc {

enum class ErrorCode {
    PolarRow,
    DegenerateGrid,
    OutOfDomain,
    IoFailure,
    FormatViolation,
    TruncatedPayload,
    BadBoundary,
    SpecMismatch,
    NonPositiveLead,
    EmptyMask,
    EmptyManifest,
    CflViolation,
    ConfigIncompatible,
    NonFiniteActivation,
    NonFiniteGradient,
    Divergence,
    BadHorizon,
    MissingForcing,
    MissingInputDay,
    InsufficientData,
    PairMismatch,
    TooFewSnapshots,
    NoValidStencil,
    InvalidArgument,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace oceanfc
