#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spinlab {

enum class ErrorCode {
    DegenerateParameter,
    RootSolverFailure,
    FixedPointOnContour,
    QuadratureNonConvergence,
    NoConvergence,
    SuperattractingUnsupported,
    NotInBasin,
    MarkedCritAtAttractor,
    BranchAmbiguity,
    NoPreimage,
    InvalidAnnulus,
    ResolutionTooCoarse,
    OnGamma,
    OutsideBasin,
    TailNotConverging,
    EndpointOnCurve,
    InvalidArgument,
};

inline constexpr std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DegenerateParameter: return "DegenerateParameter";
    case ErrorCode::RootSolverFailure: return "RootSolverFailure";
    case ErrorCode::FixedPointOnContour: return "FixedPointOnContour";
    case ErrorCode::QuadratureNonConvergence: return "QuadratureNonConvergence";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SuperattractingUnsupported: return "SuperattractingUnsupported";
    case ErrorCode::NotInBasin: return "NotInBasin";
    case ErrorCode::MarkedCritAtAttractor: return "MarkedCritAtAttractor";
    case ErrorCode::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorCode::NoPreimage: return "NoPreimage";
    case ErrorCode::InvalidAnnulus: return "InvalidAnnulus";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::OnGamma: return "OnGamma";
    case ErrorCode::OutsideBasin: return "OutsideBasin";
    case ErrorCode::TailNotConverging: return "TailNotConverging";
    case ErrorCode::EndpointOnCurve: return "EndpointOnCurve";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every library failure is reported through this exception; `code()` is the
/// machine-readable kind, `what()` carries context for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace spinlab
