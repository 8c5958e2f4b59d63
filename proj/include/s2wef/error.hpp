#pragma once

#include <stdexcept>
#include <string>

namespace s2wef {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or degenerate input (empty shard, too few clients, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values encountered during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An operation needs more broadcast global models than are available.
class HistoryError : public Error {
 public:
  using Error::Error;
};

}  // namespace s2wef
