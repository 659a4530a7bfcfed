// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_CLI_COMMANDS_H_
#define DNR_CLI_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

#include "dnr/common/error.h"

namespace dnr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitShape = 4;
inline constexpr int kExitNumeric = 5;

int exit_code(ErrorCategory c);

// args excludes the program name. The last line on `out` is a one-line JSON
// summary; progress goes to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dnr::cli

#endif  // DNR_CLI_COMMANDS_H_
