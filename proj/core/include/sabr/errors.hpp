#pragma once

#include <stdexcept>
#include <string>

namespace sabr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Delta-to-strike inversion could not find a root inside the bracket.
class ConversionFailure : public Error {
 public:
  ConversionFailure(const std::string& what, double bracket_lo, double bracket_hi)
      : Error(what), lo_(bracket_lo), hi_(bracket_hi) {}

  double bracket_lo() const noexcept { return lo_; }
  double bracket_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

class MalformedQuote : public Error {
 public:
  using Error::Error;
};

/// Price outside the no-arbitrage band; no implied volatility exists.
class NoSolution : public Error {
 public:
  using Error::Error;
};

/// The posterior support is empty: quotes cannot be matched inside bid-ask.
class CalibrationInfeasible : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sabr
