#pragma once

#include <stdexcept>
#include <string>

namespace clocksync {

/// Malformed or inconsistent caller input (bad pair, wrong sizes, k > K, ...).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// No fault placement explains the measurements.
class UnrecoverableError : public std::runtime_error {
 public:
  explicit UnrecoverableError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace clocksync
