#pragma once

#include <stdexcept>
#include <string>

namespace fracctrl {

// Malformed or out-of-contract user input (bad spec file, invalid parameter
// ranges, asymmetric system matrix, under-resolved control window).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The (A, B) pair fails the controllability tests: Kalman rank deficient or
// the steering Gramian is numerically singular.
struct NotControllableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative procedure exhausted its budget (fixed-point loop, terminal
// accuracy, independent re-simulation check).
struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failures: unreadable inputs, unwritable output directory.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fracctrl
