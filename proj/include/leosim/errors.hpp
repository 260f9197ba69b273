#pragma once

#include <stdexcept>
#include <string>

namespace leosim {

// Bad parameterization: rejected config files, out-of-domain arguments,
// malformed data files. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// An invariant broke while running. Exit code 3.
class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

inline void sim_assert(bool cond, const std::string& msg) {
  if (!cond) throw SimError(msg);
}

}  // namespace leosim
