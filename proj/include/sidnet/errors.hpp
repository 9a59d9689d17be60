#pragma once

#include <stdexcept>
#include <string>

namespace sidnet {

// Shape/dimension mismatch between tensors or against an op contract.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Semantically invalid input (out-of-range label, empty sequence, ...).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input that is syntactically valid but degenerate (all points identical,
// blank image).
class DegenerateInputError : public InputError {
 public:
  explicit DegenerateInputError(const std::string& msg) : InputError(msg) {}
};

// Malformed on-disk data: bad magic, truncated payload, CRC mismatch.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Manifest-level problems; carries the aggregated list of offenders.
class ManifestError : public std::runtime_error {
 public:
  explicit ManifestError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure: divergence, non-finite gradients, failed gradient check.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal consistency violation (e.g. optimizer sees a parameter without
// gradient storage).
class ConsistencyError : public std::logic_error {
 public:
  explicit ConsistencyError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace sidnet
