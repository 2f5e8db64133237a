#pragma once

#include <stdexcept>
#include <string>

namespace rootopt {

// Base class for every error raised by the library. Subclasses name the
// failure so callers (the CLI in particular) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

// Input to Newton-Schulz has (numerically) zero Frobenius norm.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class NumericOverflow : public Error {
 public:
  using Error::Error;
};

class AllStepsDiverged : public Error {
 public:
  using Error::Error;
};

class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

class UnroutableParameter : public Error {
 public:
  using Error::Error;
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class GradientCheckFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace rootopt
