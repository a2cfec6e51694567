#pragma once

#include <span>

#include "toothseg/imaging.hpp"

namespace toothseg {

/// Per-pixel mean over the channels of one stack.
ScalarMap channel_mean(const FeatureStack& stack);

/// Averages each stack over its channels, upsamples every mean map to the
/// largest stack grid, sums them, min-max normalizes and finally upsamples
/// to the target size. The result lies in [0, 1].
ScalarMap fuse(std::span<const FeatureStack> stacks, int target_width, int target_height);

}  // namespace toothseg
