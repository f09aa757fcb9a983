#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lexprop {

// Base class for every error raised by the library. `kind()` is a short
// machine-readable tag used by the CLI's error JSON.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

// Malformed input file. Carries the 1-based line number (0 = whole file).
class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t line, const std::string& msg)
      : Error(path + ":" + std::to_string(line) + ": " + msg),
        path_(std::move(path)),
        line_(line) {}
  const char* kind() const noexcept override { return "parse"; }
  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_argument"; }
};

// Underflow, singular systems, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical"; }
};

}  // namespace lexprop
