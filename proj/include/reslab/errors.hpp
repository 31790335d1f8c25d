#pragma once

#include <stdexcept>
#include <string>

namespace reslab {

enum class ErrorCode {
  InvalidArgument,
  DegeneratePoint,
  PrecisionExhausted,
  AtResonance,
  InconsistentRoot,
  TruncationError,
  NotApplicable,
  MisalignedGrids,
  ConfigError,
  VerificationFailed,
};

const char* to_string(ErrorCode code);

// Library error. `module` names the component that raised it so the CLI can
// report module-qualified codes such as "scattering.DegeneratePoint".
class Error : public std::runtime_error {
 public:
  Error(std::string module, ErrorCode code, const std::string& message);

  const std::string& module() const noexcept { return module_; }
  ErrorCode code() const noexcept { return code_; }
  std::string qualified_code() const;

 private:
  std::string module_;
  ErrorCode code_;
};

class PrecisionExhausted : public Error {
 public:
  PrecisionExhausted(std::string module, int needed_digits, const std::string& message);
  int needed_digits() const noexcept { return needed_digits_; }

 private:
  int needed_digits_;
};

class TruncationError : public Error {
 public:
  TruncationError(double defect, double k_max, const std::string& message);
  double defect() const noexcept { return defect_; }
  double k_max() const noexcept { return k_max_; }

 private:
  double defect_;
  double k_max_;
};

}  // namespace reslab
