#pragma once

#include <stdexcept>
#include <string>

namespace carstat {

// Error taxonomy shared by all modules. Codes are stable identifiers used by
// the CLI to choose exit codes and by tests to assert specific failures.
enum class Err {
  empty_input,
  invalid_arm,
  non_finite_outcome,
  invalid_pi,
  assumption5_violated,
  no_testable_cell,
  unknown_stratum,
  missing_margins,
  missing_cell,
  unknown_q,
  degenerate_variance,
  singular_matrix,
  not_binary,
  out_of_range,
  length_mismatch,
  invalid_params,
  config_invalid,
};

const char* err_name(Err code);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg)
      : std::runtime_error(std::string(err_name(code)) + ": " + msg), code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }

}  // namespace carstat
