#pragma once

#include <stdexcept>
#include <string>

namespace tdac {

// Base class for everything thrown by the library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument values, impossible parameter combinations, shape mismatches.
struct parameter_error : error {
  using error::error;
};

// A chain failed irreducibility/aperiodicity requirements where ergodicity is
// a precondition (stationary distribution, differential value, ...).
struct ergodicity_error : error {
  using error::error;
};

// A linear solve hit a singular or numerically hopeless system.  The message
// carries a condition-number estimate when one is available.
struct conditioning_error : error {
  using error::error;
};

// Non-finite values produced where finite ones are required (diverged iterate,
// overflow in an update, ...).
struct numerical_error : error {
  using error::error;
};

// File / serialization failures.
struct io_error : error {
  using error::error;
};

}  // namespace tdac
