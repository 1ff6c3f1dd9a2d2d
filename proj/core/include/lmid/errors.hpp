#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lmid {

// Precondition violated by the caller.
using InvalidArgument = std::invalid_argument;

// Malformed file contents. Carries the byte offset at which parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// Filesystem failure (missing file, unwritable directory).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent configuration, e.g. model channels vs. conditioning mode.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input too degenerate for the requested fit.
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-finite value appeared during iteration `step`.
class NumericalDivergence : public std::runtime_error {
 public:
  NumericalDivergence(const std::string& what, std::int64_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace lmid
