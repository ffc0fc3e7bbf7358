// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <iostream>

#include "rtbeam/cli.hpp"

int main(int argc, char** argv) {
  return rtbeam::cli::Run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
