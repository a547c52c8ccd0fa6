#pragma once

#include <stdexcept>
#include <string>

namespace aia {

// Base for all engine errors; subclasses map onto the CLI exit-code contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class EmptyInputError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };

// Raised by the trainer when a parameter becomes NaN/Inf.
class DivergenceError : public Error { using Error::Error; };

}  // namespace aia
