#ifndef TVTOPO_ERRORS_HPP
#define TVTOPO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tvtopo {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A Cholesky factorization failed on a matrix required to be SPD.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// An eigensolver or other numerical kernel did not succeed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An object was used before it reached the state an operation requires.
class StateError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class DivisionByZeroError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A solver iterate became non-finite.  `time()` is the stream index of the
/// step that produced it, or -1 when the step was not bound to a stream.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long time = -1)
      : Error(what), time_(time) {}
  long time() const { return time_; }

 private:
  long time_;
};

/// Invalid configuration.  `field()` is the dotted path of the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace tvtopo

#endif  // TVTOPO_ERRORS_HPP
