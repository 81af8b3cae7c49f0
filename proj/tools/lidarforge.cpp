// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "lidarforge/cli/cli.hpp"

int main(int argc, char** argv) { return lidarforge::execute(argc, argv, std::cout, std::cerr); }
