#pragma once

#include <stdexcept>
#include <string>

namespace ctree {

// Malformed or inconsistent input data: unreadable files, bad columns,
// values outside their domain.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The partitioning algorithm could not run with the given data/config.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ctree
