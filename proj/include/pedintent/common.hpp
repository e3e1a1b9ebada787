#pragma once

#include <stdexcept>
#include <string>

namespace pedintent {

// Error taxonomy; the CLI maps each class to its own exit code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Rejected inputs: violated preconditions, malformed files, bad config keys.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Filesystem problems: unreadable or unwritable paths.
class IoError : public Error {
public:
  using Error::Error;
};

// Numerical failures: non-PSD covariances, singular innovation matrices.
class NumericError : public Error {
public:
  using Error::Error;
};

}  // namespace pedintent
