#include "toothseg/keypoints.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "toothseg/hungarian.hpp"

namespace toothseg {

HeatmapBundle render_heatmap(std::span<const Keypoint> keypoints, int heat_width, int heat_height, int stride,
                             double sigma) {
  if (heat_width < 1 || heat_height < 1 || stride < 1) {
    fail(ErrorCode::InvalidArgument, "heatmap size and stride must be positive");
  }
  if (!(sigma > 0.0)) fail(ErrorCode::InvalidArgument, "heatmap sigma must be positive");

  HeatmapBundle bundle{ScalarMap(heat_width, heat_height, 0.0F), ScalarMap(heat_width, heat_height, 0.0F),
                       ScalarMap(heat_width, heat_height, 0.0F), stride};
  const double in_w = static_cast<double>(heat_width) * stride;
  const double in_h = static_cast<double>(heat_height) * stride;
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);

  for (const Keypoint& kp : keypoints) {
    if (!(kp.x >= 0.0 && kp.x < in_w && kp.y >= 0.0 && kp.y < in_h)) {
      fail(ErrorCode::KeypointOutOfBounds,
           "keypoint (" + std::to_string(kp.x) + ", " + std::to_string(kp.y) + ") outside the input image");
    }
    const double fx = kp.x / stride;
    const double fy = kp.y / stride;
    const int cx = static_cast<int>(std::floor(fx));
    const int cy = static_cast<int>(std::floor(fy));

    for (int v = 0; v < heat_height; ++v) {
      const double dy2 = static_cast<double>(v - cy) * (v - cy);
      for (int u = 0; u < heat_width; ++u) {
        const double d2 = static_cast<double>(u - cx) * (u - cx) + dy2;
        const float g = static_cast<float>(std::exp(-d2 * inv_two_sigma_sq));
        float& cell = bundle.heatmap(u, v);
        cell = std::max(cell, g);
      }
    }
    bundle.offset_x(cx, cy) = static_cast<float>(fx - cx);
    bundle.offset_y(cx, cy) = static_cast<float>(fy - cy);
  }
  return bundle;
}

void validate_bundle(const HeatmapBundle& bundle) {
  if (bundle.stride < 1) fail(ErrorCode::InvalidArgument, "heatmap stride must be positive");
  if (bundle.heatmap.empty()) fail(ErrorCode::InvalidArgument, "heatmap is empty");
  if (!bundle.heatmap.same_size(bundle.offset_x) || !bundle.heatmap.same_size(bundle.offset_y)) {
    fail(ErrorCode::DimensionMismatch, "heatmap and offset maps differ in size");
  }
  require_finite(bundle.heatmap.pixels(), "heatmap");
  require_finite(bundle.offset_x.pixels(), "offset_x");
  require_finite(bundle.offset_y.pixels(), "offset_y");
}

std::vector<Keypoint> decode_heatmap(const HeatmapBundle& bundle, double conf_threshold, int max_peaks) {
  validate_bundle(bundle);
  const ScalarMap& heat = bundle.heatmap;
  const int w = heat.width();
  const int h = heat.height();

  auto is_local_max = [&](int x, int y) {
    const float v = heat(x, y);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if ((dx != 0 || dy != 0) && heat.contains(x + dx, y + dy) && heat(x + dx, y + dy) > v) return false;
      }
    }
    return true;
  };

  Grid<std::uint8_t> candidate(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = heat(x, y);
      if (v > 0.0F && v >= conf_threshold && is_local_max(x, y)) candidate(x, y) = 1;
    }
  }

  struct Peak {
    int x;
    int y;
    float value;
  };
  std::vector<Peak> peaks;
  Grid<std::uint8_t> seen(w, h, 0);
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!candidate(x, y) || seen(x, y)) continue;
      const float v = heat(x, y);
      peaks.push_back({x, y, v});
      seen(x, y) = 1;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        const auto [px, py] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = px + dx, ny = py + dy;
            if (heat.contains(nx, ny) && candidate(nx, ny) && !seen(nx, ny) && heat(nx, ny) == v) {
              seen(nx, ny) = 1;
              queue.emplace_back(nx, ny);
            }
          }
        }
      }
    }
  }

  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
  if (max_peaks >= 0 && peaks.size() > static_cast<std::size_t>(max_peaks)) peaks.resize(static_cast<std::size_t>(max_peaks));

  const double max_x = std::nextafter(static_cast<double>(bundle.input_width()), 0.0);
  const double max_y = std::nextafter(static_cast<double>(bundle.input_height()), 0.0);
  std::vector<Keypoint> out;
  out.reserve(peaks.size());
  for (const Peak& p : peaks) {
    const double x = (p.x + static_cast<double>(bundle.offset_x(p.x, p.y))) * bundle.stride;
    const double y = (p.y + static_cast<double>(bundle.offset_y(p.x, p.y))) * bundle.stride;
    out.push_back({std::clamp(x, 0.0, max_x), std::clamp(y, 0.0, max_y), std::clamp<double>(p.value, 0.0, 1.0)});
  }
  return out;
}

MatchResult match_keypoints(std::span<const Keypoint> pred, std::span<const Keypoint> gt) {
  const int n = static_cast<int>(pred.size());
  const int m = static_cast<int>(gt.size());
  CostMatrix cost(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) cost(i, j) = std::hypot(pred[i].x - gt[j].x, pred[i].y - gt[j].y);
  }
  const Assignment assignment = hungarian(cost);

  MatchResult result;
  std::vector<char> pred_used(n, 0), gt_used(m, 0);
  for (const auto& [i, j] : assignment.pairs) {
    result.pairs.push_back({i, j, cost(i, j)});
    pred_used[i] = 1;
    gt_used[j] = 1;
  }
  for (int i = 0; i < n; ++i) {
    if (!pred_used[i]) result.unmatched_pred.push_back(i);
  }
  for (int j = 0; j < m; ++j) {
    if (!gt_used[j]) result.unmatched_gt.push_back(j);
  }
  return result;
}

DistanceStats distance_stats(std::span<const double> distances) {
  if (distances.empty()) fail(ErrorCode::EmptyMatching, "no matched keypoint pairs");
  std::vector<double> sorted(distances.begin(), distances.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double d : sorted) sum += d;
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return {sum / static_cast<double>(n), median};
}

DistanceStats distance_stats(const MatchResult& match) {
  std::vector<double> distances;
  distances.reserve(match.pairs.size());
  for (const MatchPair& p : match.pairs) distances.push_back(p.distance);
  return distance_stats(distances);
}

ThresholdSweep threshold_sweep(std::span<const MatchResult> matches, int t_max) {
  if (t_max < 0) fail(ErrorCode::InvalidArgument, "t_max must be >= 0");
  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };

  ThresholdSweep sweep;
  for (int t = 0; t <= t_max; ++t) {
    double tp = 0, fp = 0, fn = 0;
    for (const MatchResult& m : matches) {
      for (const MatchPair& p : m.pairs) {
        if (p.distance < t) {
          tp += 1;
        } else {
          fp += 1;
          fn += 1;
        }
      }
      fp += static_cast<double>(m.unmatched_pred.size());
      fn += static_cast<double>(m.unmatched_gt.size());
    }
    const double precision = ratio(tp, tp + fp);
    const double recall = ratio(tp, tp + fn);
    sweep.thresholds.push_back(t);
    sweep.precision.push_back(precision);
    sweep.recall.push_back(recall);
    sweep.f1.push_back(ratio(2.0 * precision * recall, precision + recall));
  }
  return sweep;
}

ThresholdSweep threshold_sweep(const MatchResult& match, int t_max) {
  return threshold_sweep(std::span<const MatchResult>(&match, 1), t_max);
}

}  // namespace toothseg
