#pragma once

#include <stdexcept>
#include <string>

namespace sparsefuse {

// Base of every error raised by the library. Callers that only need a
// diagnostic can catch this; the subclasses exist for callers that react.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (shape mismatch, bad parameter).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Too few or collinear/coincident points for a rigid solve.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// A metric has no valid samples to average over.
class UndefinedMetrics : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated or otherwise unreadable file.
class FormatError : public Error {
 public:
  FormatError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace sparsefuse
