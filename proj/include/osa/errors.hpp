#pragma once

#include <stdexcept>
#include <string>

namespace osa {

/// Argument outside its mathematical domain (probability out of [0,1], k > n, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver's memo table grew past its configured cap.
class ResourceCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration failed to parse or validate.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace osa
