#pragma once

#include <stdexcept>
#include <string>

namespace bgpr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array extents that do not agree with each other or with a mask.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input data violating a model invariant (negative intensities, nonzero
/// background on the support, asymmetric spectra, malformed files).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters (solver settings, experiment configuration).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An iterate became non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace bgpr
