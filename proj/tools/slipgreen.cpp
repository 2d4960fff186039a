// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
#include "slipgreen/cli.hpp"

int main(int argc, char** argv) { return slipgreen::cli::run(argc, argv); }
