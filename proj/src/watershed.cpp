#include "toothseg/watershed.hpp"

#include <algorithm>
#include <queue>
#include <tuple>
#include <vector>

namespace toothseg {

void validate(const WatershedParams& p) {
  if (p.alpha && !(*p.alpha >= 0.0)) fail(ErrorCode::InvalidConfig, "watershed alpha must be >= 0 or auto");
  if (!(p.peak_fraction > 0.0 && p.peak_fraction <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "watershed peak_fraction must be in (0, 1]");
  }
  if (!(p.min_prominence >= 0.0)) fail(ErrorCode::InvalidConfig, "watershed min_prominence must be >= 0");
  if (p.expected_count && *p.expected_count < 1) fail(ErrorCode::InvalidConfig, "expected_count must be >= 1");
}

ScalarMap boost_topography(const ScalarMap& dist, const ScalarMap& heat, std::optional<double> alpha) {
  if (!dist.same_size(heat)) fail(ErrorCode::DimensionMismatch, "distance map and heatmap differ in size");
  double a = 0.0;
  if (alpha) {
    a = *alpha;
  } else {
    a = dist.empty() ? 0.0 : min_max(dist).second;
    if (a == 0.0) a = 1.0;
  }
  ScalarMap out(dist.width(), dist.height());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(dist[i]) + a * static_cast<double>(heat[i]));
  }
  return out;
}

ScalarMap peak_prominence(const ScalarMap& topo, const BinaryMask& fg) {
  if (!topo.same_size(fg)) fail(ErrorCode::DimensionMismatch, "topography and foreground mask differ in size");
  const int w = topo.width();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < fg.size(); ++i) {
    if (fg[i]) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return topo[a] > topo[b]; });

  // Union-find over processed pixels; each root remembers its peak pixel.
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(fg.size(), kNone);
  std::vector<std::size_t> peak(fg.size(), kNone);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  ScalarMap prominence(topo.width(), topo.height(), 0.0F);
  for (std::size_t p : order) {
    parent[p] = p;
    peak[p] = p;
    const int x = static_cast<int>(p % static_cast<std::size_t>(w));
    const int y = static_cast<int>(p / static_cast<std::size_t>(w));
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if ((dx == 0 && dy == 0) || !topo.contains(x + dx, y + dy)) continue;
        const std::size_t n = topo.index(x + dx, y + dy);
        if (parent[n] == kNone) continue;
        const std::size_t a = find(p), b = find(n);
        if (a == b) continue;
        // The component whose peak is lower (or later on ties) dies here.
        const std::size_t pa = peak[a], pb = peak[b];
        const bool a_wins = topo[pa] > topo[pb] || (topo[pa] == topo[pb] && pa < pb);
        const std::size_t winner = a_wins ? a : b, loser = a_wins ? b : a;
        const std::size_t dying = peak[loser];
        if (dying != p) prominence[dying] = topo[dying] - topo[p];
        parent[loser] = winner;
      }
    }
  }
  for (std::size_t p : order) {
    if (find(p) == p) prominence[peak[p]] = topo[peak[p]];
  }
  return prominence;
}

MarkerSet select_markers(const ScalarMap& topo, const BinaryMask& fg, std::span<const Keypoint> keypoints,
                         const WatershedParams& params) {
  validate(params);
  if (!topo.same_size(fg)) fail(ErrorCode::DimensionMismatch, "topography and foreground mask differ in size");
  if (count_foreground(fg) == 0) fail(ErrorCode::NoForeground, "foreground mask is empty");

  const int w = topo.width(), h = topo.height();
  const float top = min_max(topo).second;
  const double floor_value = params.peak_fraction * top;

  const ScalarMap prominence = peak_prominence(topo, fg);

  BinaryMask candidate(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!fg(x, y) || topo(x, y) < floor_value) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (topo.contains(x + dx, y + dy) && topo(x + dx, y + dy) > topo(x, y)) {
            is_max = false;
            break;
          }
        }
      }
      candidate(x, y) = is_max ? 1 : 0;
    }
  }

  // Group equal-height 8-connected candidates.
  LabelMap group(w, h, 0);
  struct Peak {
    std::uint32_t group;
    float height;
  };
  std::vector<Peak> peaks;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!candidate(x, y) || group(x, y)) continue;
      const auto id = static_cast<std::uint32_t>(peaks.size() + 1);
      const float v = topo(x, y);
      peaks.push_back({id, v});
      group(x, y) = id;
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = px + dx, ny = py + dy;
            if (candidate.contains(nx, ny) && candidate(nx, ny) && !group(nx, ny) && topo(nx, ny) == v) {
              group(nx, ny) = id;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
    }
  }

  const std::size_t group_count = peaks.size();
  std::vector<float> group_prominence(group_count + 1, 0.0F);
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i]) group_prominence[group[i]] = std::max(group_prominence[group[i]], prominence[i]);
  }
  std::erase_if(peaks, [&](const Peak& p) { return group_prominence[p.group] < params.min_prominence; });
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.height > b.height; });
  std::size_t keep = peaks.size();
  if (params.expected_count) {
    keep = std::min(keep, static_cast<std::size_t>(*params.expected_count));
  } else if (!keypoints.empty()) {
    keep = std::min(keep, keypoints.size());
  }

  std::vector<std::uint32_t> rank(group_count + 1, 0);
  for (std::size_t r = 0; r < keep; ++r) rank[peaks[r].group] = static_cast<std::uint32_t>(r + 1);

  MarkerSet markers{LabelMap(w, h, 0), static_cast<std::uint32_t>(keep), static_cast<std::uint32_t>(keep + 1)};
  for (std::size_t i = 0; i < topo.size(); ++i) {
    if (!fg[i]) {
      markers.labels[i] = markers.background_label;
    } else if (group[i]) {
      markers.labels[i] = rank[group[i]];
    }
  }
  return markers;
}

LabelMap watershed_flood(const ScalarMap& topo, const LabelMap& markers, const BinaryMask& fg,
                         Connectivity connectivity, std::uint32_t background_label) {
  if (!topo.same_size(markers) || !topo.same_size(fg)) {
    fail(ErrorCode::DimensionMismatch, "watershed inputs differ in size");
  }
  const int w = topo.width(), h = topo.height();

  // (priority = -height, insertion order, pixel index); smallest first.
  using Entry = std::tuple<double, std::uint64_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::uint64_t seq = 0;

  LabelMap labels = markers;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) queue.emplace(-static_cast<double>(topo[i]), seq++, i);
  }
  if (queue.empty()) fail(ErrorCode::NoMarkers, "no watershed markers");

  const bool eight = connectivity == Connectivity::Eight;
  while (!queue.empty()) {
    const auto [prio, order, idx] = queue.top();
    queue.pop();
    const std::uint32_t label = labels[idx];
    const bool restricted = background_label != 0 && label != background_label;
    const int x = static_cast<int>(idx % static_cast<std::size_t>(w));
    const int y = static_cast<int>(idx / static_cast<std::size_t>(w));
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if ((dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0)) continue;
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t n = labels.index(nx, ny);
        if (labels[n] || (restricted && !fg[n])) continue;
        labels[n] = label;
        queue.emplace(std::max(-static_cast<double>(topo[n]), prio), seq++, n);
      }
    }
  }
  return labels;
}

BinaryMask labels_to_mask(const LabelMap& labels, std::uint32_t background_label) {
  BinaryMask out(labels.width(), labels.height());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = (labels[i] != 0 && labels[i] != background_label) ? 1 : 0;
  }
  return out;
}

}  // namespace toothseg
