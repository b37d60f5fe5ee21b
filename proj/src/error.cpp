#include "psksdr/error.hpp"

namespace psksdr {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::numerical: return "numerical";
    case ErrorCode::infeasible_input: return "infeasible-input";
    case ErrorCode::construction: return "construction";
    case ErrorCode::size_guard: return "size-guard";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace psksdr
