#pragma once

#include <stdexcept>
#include <string>

namespace cclab {

// Exit codes used by the CLI: 0 ok, 2 config error, 3 regime/precondition
// violation, 4 numerical failure.
enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_regime = 3,
  exit_numeric = 4,
};

struct Error : std::runtime_error {
  int exit_code;
  Error(const std::string& what, int code) : std::runtime_error(what), exit_code(code) {}
};

struct ConfigParse : Error {
  explicit ConfigParse(const std::string& w) : Error("ConfigParse: " + w, exit_config) {}
};
struct IOFailure : Error {
  explicit IOFailure(const std::string& w) : Error("IOFailure: " + w, exit_config) {}
};

struct PrecisionExhausted : Error {
  explicit PrecisionExhausted(const std::string& w) : Error("PrecisionExhausted: " + w, exit_numeric) {}
};
struct RationalInput : Error {
  explicit RationalInput(const std::string& w) : Error("RationalInput: " + w, exit_regime) {}
};
struct InsufficientDepth : Error {
  explicit InsufficientDepth(const std::string& w) : Error("InsufficientDepth: " + w, exit_regime) {}
};
struct CapacityExceeded : Error {
  explicit CapacityExceeded(const std::string& w) : Error("CapacityExceeded: " + w, exit_regime) {}
};
struct SingularConjugacy : Error {
  explicit SingularConjugacy(const std::string& w) : Error("SingularConjugacy: " + w, exit_numeric) {}
};
struct NoConvergence : Error {
  explicit NoConvergence(const std::string& w) : Error("NoConvergence: " + w, exit_numeric) {}
};
struct DegenerateDeterminant : Error {
  explicit DegenerateDeterminant(const std::string& w) : Error("DegenerateDeterminant: " + w, exit_numeric) {}
};
struct SmallnessViolated : Error {
  explicit SmallnessViolated(const std::string& w) : Error("SmallnessViolated: " + w, exit_regime) {}
};
struct NotNUH : Error {
  explicit NotNUH(const std::string& w) : Error("NotNUH: " + w, exit_regime) {}
};
struct RegimeViolated : Error {
  explicit RegimeViolated(const std::string& w) : Error("RegimeViolated: " + w, exit_regime) {}
};
struct StepUnderflow : Error {
  explicit StepUnderflow(const std::string& w) : Error("StepUnderflow: " + w, exit_numeric) {}
};
struct FitResidualTooLarge : Error {
  explicit FitResidualTooLarge(const std::string& w) : Error("FitResidualTooLarge: " + w, exit_numeric) {}
};
struct NoLiouvilleScale : Error {
  explicit NoLiouvilleScale(const std::string& w) : Error("NoLiouvilleScale: " + w, exit_regime) {}
};

}  // namespace cclab
