#pragma once

#include <stdexcept>
#include <string>

namespace gstg {

// Failures of a numerical procedure on otherwise valid input (ill-conditioned
// systems, divergent special-function arguments, bookkeeping drift).
// Invalid arguments use std::invalid_argument.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class SingularSystemError : public NumericalError {
 public:
  explicit SingularSystemError(const std::string& what) : NumericalError(what) {}
};

class BookkeepingDriftError : public NumericalError {
 public:
  explicit BookkeepingDriftError(const std::string& what) : NumericalError(what) {}
};

}  // namespace gstg
