#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "toothseg/imaging.hpp"

namespace toothseg {

using Histogram = std::array<std::uint64_t, 256>;

Histogram histogram(const GrayImage& img);

/// Threshold in 0..254 maximizing between-class variance; ties resolve to
/// the smallest threshold. Foreground is value > t. The comparison is done
/// in exact integer arithmetic. Throws ConstantInput when fewer than two
/// bins are occupied.
int otsu_threshold(const Histogram& hist);
int otsu_threshold(const GrayImage& img);

/// Quantizes a [0,1] map to 256 levels (round(v * 255), clamped).
GrayImage quantize_unit_map(const ScalarMap& map);

BinaryMask threshold_above(const GrayImage& img, int t);

enum class SeShape { Square, Disk };

struct StructuringElement {
  SeShape shape = SeShape::Square;
  int radius = 2;
};

enum class MorphOp { Dilate, Erode, Close, Open };

/// Pixels outside the image never contribute foreground to a dilation and
/// never remove foreground in an erosion, so closing is extensive.
BinaryMask morphology(const BinaryMask& mask, MorphOp op, const StructuringElement& se);
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se);
BinaryMask erode(const BinaryMask& mask, const StructuringElement& se);

/// Background not 4-connected to the image border becomes foreground.
BinaryMask fill_holes(const BinaryMask& mask);

enum class Connectivity { Four = 4, Eight = 8 };

struct Components {
  LabelMap labels;  // 1..count in row-major first-encounter order
  std::uint32_t count = 0;
};

Components connected_components(const BinaryMask& mask, Connectivity connectivity);

/// Exact squared Euclidean distance to the nearest background pixel, with
/// everything outside the image treated as background.
Grid<std::int64_t> squared_distance_transform(const BinaryMask& mask);
ScalarMap distance_transform(const BinaryMask& mask);

}  // namespace toothseg
