#pragma once

#include <stdexcept>
#include <string>

namespace ffalm {

// All recoverable failures (bad input, contract violations, undefined
// metrics) are reported through this type. Message strings name the
// offending field/row so CLI output stays actionable.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

[[noreturn]] inline void fail(std::string msg) { throw Error(std::move(msg)); }

}  // namespace ffalm
