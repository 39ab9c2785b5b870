#pragma once

#include <stdexcept>
#include <string>

namespace chainwatch {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems with trace, fingerprint, SDG, vocabulary, or model files.
class FormatError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace chainwatch
