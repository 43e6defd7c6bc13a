#pragma once

#include <stdexcept>
#include <string>

namespace dspp {

// Argument and precondition violations use std::invalid_argument /
// std::out_of_range. The types below cover failures that depend on external
// input or on the numerical state of a run.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed interaction data (bad CSV row, negative timestamp, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unknown configuration keys / values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint that cannot be read or does not match the model / data.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Missing or unreadable files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dspp
