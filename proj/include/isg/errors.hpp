#pragma once

#include <stdexcept>
#include <string>

namespace isg {

// Thrown when a requested computation exceeds a hard feasibility cap
// (e.g. exhaustive enumeration past the node limit). The CLI maps this
// to its own exit code, distinct from data errors.
class infeasible_error : public std::runtime_error {
 public:
  explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace isg
