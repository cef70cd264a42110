#pragma once

#include <stdexcept>

namespace psnis {

/// Caller passed something outside an operation's domain (bad dimensions,
/// negative counts, k larger than the data set, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A cluster cannot support a Gaussian density or a sampling pool
/// (empty roster, covariance still not positive definite after the ridge).
class ModelDegenerate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal invariant broken, e.g. an output pixel covered by no patch.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Unreadable or malformed image data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model file is truncated, has a bad magic/CRC, or inconsistent header.
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace psnis
