// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#define SLIPGREEN_VERSION_STRING "0.1.0"

#include "slipgreen/errors.hpp"
#include "slipgreen/linalg.hpp"
#include "slipgreen/quadrature.hpp"
#include "slipgreen/geometry.hpp"
#include "slipgreen/grid.hpp"
#include "slipgreen/operators.hpp"
#include "slipgreen/snapshot.hpp"
#include "slipgreen/generators.hpp"
#include "slipgreen/stepper.hpp"
#include "slipgreen/kernels.hpp"
#include "slipgreen/oracle.hpp"
#include "slipgreen/reconstruct.hpp"
#include "slipgreen/diagnostics.hpp"
#include "slipgreen/crosscheck.hpp"

namespace slipgreen {
inline constexpr const char* version = SLIPGREEN_VERSION_STRING;
}
