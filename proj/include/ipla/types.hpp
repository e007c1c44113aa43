#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace ipla {

/// A point of the sample space R^d.
using Point = Eigen::VectorXd;

/// Raised when an operation is not defined for a given potential
/// (e.g. the gradient of the non-smooth deconvolution posterior).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid user configuration. Carries the offending key and, when the value
/// came from a file, its line number.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message, int line = 0);

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

/// File could not be read or written, or had the wrong format.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_dim(const Point& x, std::size_t dim, const char* what);
void require_finite(const Point& x, const char* what);

}  // namespace ipla
