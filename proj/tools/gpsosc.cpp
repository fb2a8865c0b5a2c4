// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "gpsosc/cli.hpp"

int main(int argc, char** argv) { return gpsosc::run_cli(argc, argv, std::cout, std::cerr); }
