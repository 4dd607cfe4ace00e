#pragma once

#include <stdexcept>
#include <string>

namespace mgsp {

// Base class for everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something malformed: bad shapes, out-of-range indices,
// inconsistent configuration, unknown file versions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure failed on valid input: power iteration did not
// converge, training diverged.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mgsp
