#pragma once

#include <stdexcept>
#include <string>

namespace wese {

/// Bad configuration, bad file schema, missing template slot. Aborts a run
/// before any episode starts (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// API misuse, e.g. stepping a finished environment.
class UsageError : public std::logic_error {
 public:
  explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace wese
