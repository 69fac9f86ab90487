#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace discbench {

// Bad user-supplied configuration (unknown kind, missing seed, invalid dims).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem / parse failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Violated input contract detected at runtime (non-finite entries, norm bounds).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Rejection sampling gave up; carries how many draws were attempted.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, std::int64_t attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  std::int64_t attempts() const { return attempts_; }

 private:
  std::int64_t attempts_;
};

}  // namespace discbench
