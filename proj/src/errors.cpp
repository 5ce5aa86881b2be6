#include "carstat/errors.hpp"

namespace carstat {

const char* err_name(Err code) {
  switch (code) {
    case Err::empty_input: return "EmptyInput";
    case Err::invalid_arm: return "InvalidArm";
    case Err::non_finite_outcome: return "NonFiniteOutcome";
    case Err::invalid_pi: return "InvalidPi";
    case Err::assumption5_violated: return "Assumption5Violated";
    case Err::no_testable_cell: return "NoTestableCell";
    case Err::unknown_stratum: return "UnknownStratum";
    case Err::missing_margins: return "MissingMargins";
    case Err::missing_cell: return "MissingCell";
    case Err::unknown_q: return "UnknownQ";
    case Err::degenerate_variance: return "DegenerateVariance";
    case Err::singular_matrix: return "SingularMatrix";
    case Err::not_binary: return "NotBinary";
    case Err::out_of_range: return "OutOfRange";
    case Err::length_mismatch: return "LengthMismatch";
    case Err::invalid_params: return "InvalidParams";
    case Err::config_invalid: return "ConfigInvalid";
  }
  return "UnknownError";
}

}  // namespace carstat
