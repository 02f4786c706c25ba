#pragma once

#include <stdexcept>
#include <string>

namespace prefnoise {

/// Invalid configuration or precondition violation detected at construction time.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value (loss, metric, parameter).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network transport failure after all retries were exhausted.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A response or file could not be parsed. The offending text is kept.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string raw)
      : std::runtime_error(what), raw_(std::move(raw)) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace prefnoise
