#pragma once

#include <stdexcept>
#include <string>

namespace psksdr {

enum class ErrorCode {
  invalid_parameter,
  dimension_mismatch,
  numerical,
  infeasible_input,
  construction,
  size_guard,
  io,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the library; the code is what the C API reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace psksdr
