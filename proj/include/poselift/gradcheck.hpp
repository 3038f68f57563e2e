// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace poselift {

// Finite-difference audit of every differentiable component, ending with a
// full single-frame network. Returns (component name, max relative gradient
// error) pairs in a fixed order. Deterministic in the seed.
std::vector<std::pair<std::string, double>> gradient_check_suite(std::uint64_t seed);

// Errors at or above this are failures. Central differences on O(1) outputs
// resolve roughly 1e-6..1e-5; everything healthy lands well under 1e-4.
inline constexpr double kGradCheckTolerance = 1e-4;

}  // namespace poselift
