#pragma once

#include <stdexcept>
#include <string>

namespace cgedge {

// Covariance-like matrix failed the minimum-eigenvalue check.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

// |∫ L dγ| (or a Monte-Carlo evidence estimate) is too small to divide by.
class DegenerateNormalizer : public std::runtime_error {
 public:
  explicit DegenerateNormalizer(const std::string& what) : std::runtime_error(what) {}
};

// Invalid run configuration (schema, ranges, missing keys).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cgedge
