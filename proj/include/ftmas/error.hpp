#pragma once

#include <stdexcept>
#include <string>

namespace ftmas {

enum class ErrorCode {
  InvalidArgument,
  NotHurwitz,
  IllConditioned,
  Infeasible,
  HamiltonianImaginaryAxis,
  MaxIterExceeded,
  NotControlledInvariant,
  NoSpanningTree,
  MMatrixViolation,
  AllActuatorsLost,
  NotStabilizable,
  NeverExceeds,
  NonFiniteState,
  ZeroDisturbanceEnergy,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ftmas
