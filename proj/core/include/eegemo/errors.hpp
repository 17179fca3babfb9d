#pragma once

#include <stdexcept>
#include <string>

namespace eegemo {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (unknown selector, bad knob value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input too short / wrong length for the requested transform.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Mismatched tensor or matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed file header (magic, version, dimensions).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File payload does not match what the header promises.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Semantically invalid input data (rating out of range, missing trial).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Requested time or index range lies outside the data.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Training cannot proceed on the supplied data.
class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace eegemo
