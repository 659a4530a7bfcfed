// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/common/error.h"

namespace dnr {

std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kConfig:
      return "config";
    case ErrorCategory::kIo:
      return "io";
    case ErrorCategory::kShape:
      return "shape";
    case ErrorCategory::kNumeric:
      return "numeric";
  }
  return "unknown";
}

}  // namespace dnr
