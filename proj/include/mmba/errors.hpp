#pragma once

#include <stdexcept>
#include <string>

namespace mmba {

// Base class for everything this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector shapes.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid configuration value or unknown configuration key.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed records, mismatched lengths, inconsistent labels.
struct DataError : Error {
  using Error::Error;
};

// Corrupt or truncated binary/text file content.
struct FormatError : Error {
  using Error::Error;
};

// Metric undefined for the given inputs (e.g. single-class ROC).
struct MetricError : Error {
  using Error::Error;
};

// API misuse, e.g. backward() on a detached tensor.
struct UsageError : Error {
  using Error::Error;
};

// File missing or unreadable.
struct IoError : Error {
  using Error::Error;
};

// Non-finite values where finite input is required.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace mmba
