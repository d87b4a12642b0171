#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace attrprobe {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number of the offending row.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message)
      : Error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid configuration or missing input path; maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Remote embedding service failure.
class RemoteError : public Error {
 public:
  RemoteError(const std::string& message, bool retriable)
      : Error(message), retriable_(retriable) {}

  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

}  // namespace attrprobe
