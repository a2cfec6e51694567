#include "toothseg/fusion.hpp"

#include <string>

namespace toothseg {

ScalarMap channel_mean(const FeatureStack& stack) {
  if (stack.channels() < 1) fail(ErrorCode::InvalidArgument, "feature stack has no channels");
  require_finite(stack.values(), "feature stack");
  const std::size_t plane = stack.plane_size();
  std::vector<double> acc(plane, 0.0);
  for (int c = 0; c < stack.channels(); ++c) {
    const auto values = stack.channel(c);
    for (std::size_t i = 0; i < plane; ++i) acc[i] += values[i];
  }
  ScalarMap out(stack.width(), stack.height());
  for (std::size_t i = 0; i < plane; ++i) out[i] = static_cast<float>(acc[i] / stack.channels());
  return out;
}

ScalarMap fuse(std::span<const FeatureStack> stacks, int target_width, int target_height) {
  if (stacks.empty()) fail(ErrorCode::EmptyStackList, "no feature stacks to fuse");
  if (target_width < 1 || target_height < 1) fail(ErrorCode::InvalidArgument, "fusion target size must be >= 1");

  std::size_t largest = 0;
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const FeatureStack& s = stacks[i];
    if (s.width() < 1 || s.height() < 1) fail(ErrorCode::InvalidArgument, "empty feature stack");
    if (s.width() > target_width || s.height() > target_height) {
      fail(ErrorCode::InvalidArgument, "feature stack " + std::to_string(i) + " (" + std::to_string(s.width()) + "x" +
                                           std::to_string(s.height()) + ") is larger than the target size");
    }
    if (s.plane_size() > stacks[largest].plane_size()) largest = i;
  }

  const int grid_w = stacks[largest].width();
  const int grid_h = stacks[largest].height();
  ScalarMap sum(grid_w, grid_h, 0.0F);
  for (const FeatureStack& s : stacks) {
    const ScalarMap mean = bilinear_resize(channel_mean(s), grid_w, grid_h);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += mean[i];
  }
  return bilinear_resize(minmax_normalize(sum), target_width, target_height);
}

}  // namespace toothseg
