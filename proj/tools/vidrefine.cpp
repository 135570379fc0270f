// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "vidrefine/cli.hpp"

int main(int argc, char** argv) { return vidrefine::run_cli(argc, argv, std::cout, std::cerr); }
