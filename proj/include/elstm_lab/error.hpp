#pragma once

#include <stdexcept>
#include <string>

namespace elstm_lab {

// Shape and contract violations (bad dimensions, out-of-range indices).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values, SVD non-convergence, diverged training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input files: missing, empty, malformed UTF-8 or JSON.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace elstm_lab
