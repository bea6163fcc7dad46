#pragma once

#include <stdexcept>
#include <string>

namespace levy_passage {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its domain (bad grid, bad parameter range, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A tail or density of the Lévy measure returned a non-finite value.
class MeasureEvaluationError : public Error {
 public:
  using Error::Error;
};

/// Simulation configuration cannot be honoured (e.g. jump rate above the cap).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Root finding or quadrature failed; the message carries the diagnostics.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NoCramerRootError : public Error {
 public:
  using Error::Error;
};

class TiltError : public Error {
 public:
  using Error::Error;
};

/// Too many paths were censored at the simulation horizon.
class HorizonTooShortError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModelError : public Error {
 public:
  using Error::Error;
};

/// Config file problem, carrying the offending line and field.
class ConfigParseError : public Error {
 public:
  ConfigParseError(const std::string& field, int line, const std::string& what)
      : Error(format(field, line, what)), field_(field), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, int line, const std::string& what) {
    std::string out = "config error";
    if (line > 0) out += " at line " + std::to_string(line);
    if (!field.empty()) out += " in field '" + field + "'";
    return out + ": " + what;
  }

  std::string field_;
  int line_;
};

}  // namespace levy_passage
