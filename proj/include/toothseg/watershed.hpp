#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "toothseg/classical.hpp"
#include "toothseg/keypoints.hpp"

namespace toothseg {

struct WatershedParams {
  std::optional<double> alpha;  // empty = auto (max of the distance map)
  double peak_fraction = 0.2;
  // A peak must rise this much above the highest saddle joining it (inside
  // the foreground) to a taller peak.
  double min_prominence = 1.0;
  std::optional<int> expected_count;
  Connectivity connectivity = Connectivity::Four;
};

void validate(const WatershedParams& params);

/// dist + alpha * heat, with alpha = max(dist) (or 1 if that is 0) in auto mode.
/// Prominence of every foreground pixel that is the first (highest, then
/// row-major) pixel of its 8-connected upper level set; 0 elsewhere. Peaks
/// never dominated inside their blob get their own height.
ScalarMap peak_prominence(const ScalarMap& topo, const BinaryMask& fg);

ScalarMap boost_topography(const ScalarMap& dist, const ScalarMap& heat, std::optional<double> alpha);

struct MarkerSet {
  LabelMap labels;  // 1..tooth_count teeth (tallest first), background_label elsewhere outside fg
  std::uint32_t tooth_count = 0;
  std::uint32_t background_label = 0;
};

/// Candidate peaks are foreground 3x3 maxima of topo reaching
/// peak_fraction * max(topo) with at least min_prominence; an 8-connected
/// equal-height group counts as one peak. Keeps the K tallest where
/// K = expected_count, else the keypoint count, else everything.
/// Throws NoForeground.
MarkerSet select_markers(const ScalarMap& topo, const BinaryMask& fg, std::span<const Keypoint> keypoints,
                         const WatershedParams& params);

/// Priority flood from the markers over -topo (highest topo first, FIFO on
/// ties). When background_label is nonzero, every other label may only grow
/// into fg pixels and the background label takes whatever is left.
LabelMap watershed_flood(const ScalarMap& topo, const LabelMap& markers, const BinaryMask& fg,
                         Connectivity connectivity, std::uint32_t background_label = 0);

/// Foreground = label not 0 and not background_label.
BinaryMask labels_to_mask(const LabelMap& labels, std::uint32_t background_label);

}  // namespace toothseg
