#pragma once

#include <stdexcept>
#include <string>

namespace ecnd {

// Shape/dimension mismatch between tensors or between a tensor and layer
// parameters.
class ShapeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value (bad depth, epoch out of range, zero batch
// size, ...).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A cache or optimizer state does not match the model state it is used with.
class StateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// File system / image decoding failures. Messages carry the path.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed checkpoint: bad magic, unsupported version, truncation,
// checksum mismatch.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss or gradient.
class DivergedError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace ecnd
