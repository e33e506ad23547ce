#include "ftmas/error.hpp"

namespace ftmas {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotHurwitz: return "NotHurwitz";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::HamiltonianImaginaryAxis: return "HamiltonianImaginaryAxis";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::NotControlledInvariant: return "NotControlledInvariant";
    case ErrorCode::NoSpanningTree: return "NoSpanningTree";
    case ErrorCode::MMatrixViolation: return "MMatrixViolation";
    case ErrorCode::AllActuatorsLost: return "AllActuatorsLost";
    case ErrorCode::NotStabilizable: return "NotStabilizable";
    case ErrorCode::NeverExceeds: return "NeverExceeds";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::ZeroDisturbanceEnergy: return "ZeroDisturbanceEnergy";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace ftmas
