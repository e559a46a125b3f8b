#pragma once

#include <stdexcept>
#include <string>

namespace starkplan {

/// Input outside the validated range of a model (e.g. bias beyond the fit
/// range). Never silently extrapolated.
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

/// A model evaluated inside its domain produced an unphysical result
/// (e.g. non-positive linewidth from a broadening law).
class model_error : public std::runtime_error {
 public:
  explicit model_error(const std::string& what) : std::runtime_error(what) {}
};

/// Requested target cannot be reached within the device's valid range.
class unreachable_error : public std::runtime_error {
 public:
  explicit unreachable_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; message carries line/column diagnostics.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace starkplan
