// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <iostream>
#include <string>
#include <vector>

#include "dnr/cli/commands.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dnr::cli::run(args, std::cout, std::cerr);
}
