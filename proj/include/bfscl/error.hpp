#pragma once

#include <stdexcept>
#include <string>

namespace bfscl {

// Base of every error raised by the library. `exit_code()` maps the error
// family onto the CLI exit codes: 1 usage/config, 2 data/bundle, 3 runtime.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 3; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 1; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 1; }
};

class ProtocolError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class FormatError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class CorruptionError : public Error {
 public:
  CorruptionError(const std::string& what, std::size_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  int exit_code() const override { return 2; }
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class BundleError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class VocabularyError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

}  // namespace bfscl
