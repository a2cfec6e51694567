#pragma once

#include <span>
#include <vector>

#include "toothseg/imaging.hpp"

namespace toothseg {

/// Tooth center in input-image pixel coordinates.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double score = 1.0;
};

/// Stand-in for the detector's output heads: a [0,1] center heatmap plus
/// sub-cell offset maps, all at 1/stride of the input resolution.
struct HeatmapBundle {
  ScalarMap heatmap;
  ScalarMap offset_x;
  ScalarMap offset_y;
  int stride = 4;

  int input_width() const noexcept { return heatmap.width() * stride; }
  int input_height() const noexcept { return heatmap.height() * stride; }
};

inline constexpr double kDefaultHeatmapSigma = 4.0;
inline constexpr double kDefaultConfThreshold = 0.3;
inline constexpr int kDefaultMaxPeaks = 32;

/// Gaussian splat per keypoint, max-combined. Offsets at a shared cell come
/// from the later keypoint. Throws KeypointOutOfBounds.
HeatmapBundle render_heatmap(std::span<const Keypoint> keypoints, int heat_width, int heat_height, int stride,
                             double sigma = kDefaultHeatmapSigma);

/// Peaks are 3x3 maxima (>=) with value >= conf_threshold and > 0; an equal
/// valued 8-connected plateau of maxima yields only its first row-major cell.
/// Returns at most max_peaks keypoints, highest score first.
std::vector<Keypoint> decode_heatmap(const HeatmapBundle& bundle, double conf_threshold = kDefaultConfThreshold,
                                     int max_peaks = kDefaultMaxPeaks);

void validate_bundle(const HeatmapBundle& bundle);

struct MatchPair {
  int pred = 0;
  int gt = 0;
  double distance = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<int> unmatched_pred;
  std::vector<int> unmatched_gt;
};

/// Hungarian matching on Euclidean pixel distance.
MatchResult match_keypoints(std::span<const Keypoint> pred, std::span<const Keypoint> gt);

struct DistanceStats {
  double mean = 0.0;
  double median = 0.0;
};

/// Throws EmptyMatching when there are no pairs.
DistanceStats distance_stats(const MatchResult& match);
DistanceStats distance_stats(std::span<const double> distances);

struct ThresholdSweep {
  std::vector<double> thresholds;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
};

/// Thresholds 0..t_max; a pair is a true positive when distance < t.
ThresholdSweep threshold_sweep(const MatchResult& match, int t_max);
/// Pooled counts over several images.
ThresholdSweep threshold_sweep(std::span<const MatchResult> matches, int t_max);

}  // namespace toothseg
