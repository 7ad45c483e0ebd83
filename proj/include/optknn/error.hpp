#pragma once

#include <stdexcept>
#include <string>

namespace optknn {

enum class ErrorCode {
  DimensionMismatch,
  InvalidDataset,
  InsufficientPool,
  SingularDesign,
  InsufficientData,
  InvalidMarginal,
  NoTreated,
  InfeasibleStratification,
  InfeasibleK,
  UndefinedStatistic,
  InvalidArgument,
  Parse,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace optknn
