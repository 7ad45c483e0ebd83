#include "optknn/error.hpp"

namespace optknn {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::InvalidDataset: return "invalid dataset";
    case ErrorCode::InsufficientPool: return "insufficient pool";
    case ErrorCode::SingularDesign: return "singular design";
    case ErrorCode::InsufficientData: return "insufficient data";
    case ErrorCode::InvalidMarginal: return "invalid marginal probability";
    case ErrorCode::NoTreated: return "no treated units";
    case ErrorCode::InfeasibleStratification: return "infeasible stratification";
    case ErrorCode::InfeasibleK: return "infeasible k";
    case ErrorCode::UndefinedStatistic: return "undefined statistic";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Io: return "i/o error";
  }
  return "unknown error";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace optknn
