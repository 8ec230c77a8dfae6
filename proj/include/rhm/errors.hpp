#pragma once

#include <stdexcept>
#include <string>

namespace rhm {

// Caller passed an argument violating a documented precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data (files, datasets, external maps) is missing or malformed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rhm
