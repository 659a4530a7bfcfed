// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_COMMON_ERROR_H_
#define DNR_COMMON_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dnr {

// Every library failure carries one of these categories; the CLI maps them
// to exit codes.
enum class ErrorCategory { kConfig, kIo, kShape, kNumeric };

std::string_view category_name(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what)
      : Error(ErrorCategory::kShape, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorCategory::kNumeric, what) {}
};

}  // namespace dnr

#endif  // DNR_COMMON_ERROR_H_
