#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsut {

enum class ErrorCode {
    NotHermitian,
    TraceNotOne,
    NotPSD,
    NotIdentityResolution,
    TooFewOutcomes,
    DimensionOverflow,
    DimensionMismatch,
    ConvergenceFailure,
    InvalidBlochVector,
    InvalidArgument,
    EmptyGrid,
    InconsistentTranscript,
    InvariantViolation,
    InfeasibleCalibration,
    HorizonTooLarge,
    ParseError,
    ConfigError,
    IoError,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above; the
/// message names the violated condition and, where there is one, the
/// offending magnitude.
class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string &message);

    ErrorCode code() const noexcept {
        return code_;
    }

   private:
    ErrorCode code_;
};

}  // namespace qsut
