#pragma once

#include <stdexcept>
#include <string>

namespace wtpgmr {

/// Bad input: wrong dimensions, malformed files, violated preconditions.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine could not produce a finite answer
/// (singular matrix, non-finite objective, EM collapse).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wtpgmr
