#include "reslab/errors.hpp"

#include <utility>

namespace reslab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegeneratePoint: return "DegeneratePoint";
    case ErrorCode::PrecisionExhausted: return "PrecisionExhausted";
    case ErrorCode::AtResonance: return "AtResonance";
    case ErrorCode::InconsistentRoot: return "InconsistentRoot";
    case ErrorCode::TruncationError: return "TruncationError";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::MisalignedGrids: return "MisalignedGrids";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::VerificationFailed: return "VerificationFailed";
  }
  return "Unknown";
}

Error::Error(std::string module, ErrorCode code, const std::string& message)
    : std::runtime_error(message), module_(std::move(module)), code_(code) {}

std::string Error::qualified_code() const { return module_ + "." + to_string(code_); }

PrecisionExhausted::PrecisionExhausted(std::string module, int needed_digits,
                                       const std::string& message)
    : Error(std::move(module), ErrorCode::PrecisionExhausted,
            message + " (needs at least " + std::to_string(needed_digits) + " digits)"),
      needed_digits_(needed_digits) {}

TruncationError::TruncationError(double defect, double k_max, const std::string& message)
    : Error("spectral", ErrorCode::TruncationError, message), defect_(defect), k_max_(k_max) {}

}  // namespace reslab
