#pragma once

#include <stdexcept>
#include <string>

namespace tangled {

/// Invalid configuration: a parameter outside its documented domain.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violating a dataset invariant (shape, parse, finiteness, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical quantity is undefined for the given input.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tangled
