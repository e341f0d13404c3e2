// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview_tools/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return splatview::tools::run_cli(argc, argv, std::cout, std::cerr); }
