#pragma once

#include <stdexcept>
#include <string>

namespace cmlab {

/// Base class for every error thrown by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the domain of the law or operation.
class parameter_error : public error {
 public:
  using error::error;
};

/// Malformed input data (too few points, negative values where forbidden, ...).
class input_error : public error {
 public:
  using error::error;
};

/// A query point lies outside the span of the object it was asked of.
class range_error : public error {
 public:
  using error::error;
};

/// A construction did not cover what the caller asked for.
class coverage_error : public error {
 public:
  using error::error;
};

/// Unknown experiment name or parameter.
class registry_error : public error {
 public:
  using error::error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw parameter_error(what);
}

}  // namespace detail
}  // namespace cmlab
