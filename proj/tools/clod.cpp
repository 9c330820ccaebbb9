//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/cli.hpp"

int main(int argc, char** argv) { return clod::run_cli(argc, argv); }
