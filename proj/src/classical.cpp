#include "toothseg/classical.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <boost/multiprecision/cpp_int.hpp>

namespace toothseg {

Histogram histogram(const GrayImage& img) {
  Histogram hist{};
  for (std::uint8_t v : img.pixels()) ++hist[v];
  return hist;
}

int otsu_threshold(const Histogram& hist) {
  using Big = boost::multiprecision::int256_t;

  int occupied = 0;
  std::uint64_t total = 0;
  std::uint64_t total_sum = 0;
  for (int i = 0; i < 256; ++i) {
    if (hist[i] > 0) ++occupied;
    total += hist[i];
    total_sum += static_cast<std::uint64_t>(i) * hist[i];
  }
  if (occupied < 2) fail(ErrorCode::ConstantInput, "Otsu threshold undefined for a constant input");

  // sigma_between^2 * N^2 = (S0*N - S*w0)^2 / (w0*w1); compared by cross
  // multiplication so ties are detected exactly.
  int best_t = -1;
  Big best_num = 0;
  Big best_den = 1;
  std::uint64_t w0 = 0;
  std::uint64_t s0 = 0;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[t];
    s0 += static_cast<std::uint64_t>(t) * hist[t];
    const std::uint64_t w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const Big diff = Big(s0) * Big(total) - Big(total_sum) * Big(w0);
    const Big num = diff * diff;
    const Big den = Big(w0) * Big(w1);
    if (best_t < 0 || num * best_den > best_num * den) {
      best_t = t;
      best_num = num;
      best_den = den;
    }
  }
  return best_t;
}

int otsu_threshold(const GrayImage& img) { return otsu_threshold(histogram(img)); }

GrayImage quantize_unit_map(const ScalarMap& map) {
  GrayImage out(map.width(), map.height());
  for (std::size_t i = 0; i < map.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(static_cast<double>(map[i]) * 255.0), 0, 255));
  }
  return out;
}

BinaryMask threshold_above(const GrayImage& img, int t) {
  BinaryMask out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i] > t ? 1 : 0;
  return out;
}

namespace {

void check_se(const StructuringElement& se) {
  if (se.radius < 1) fail(ErrorCode::InvalidArgument, "structuring element radius must be >= 1");
}

// One separable pass of a square window along rows (horizontal) or columns.
// `want_any`: dilation (any foreground in window) vs erosion (all in-bounds
// pixels foreground).
BinaryMask square_pass(const BinaryMask& in, int r, bool horizontal, bool want_any) {
  const int w = in.width(), h = in.height();
  BinaryMask out(w, h);
  const int len = horizontal ? w : h;
  const int lines = horizontal ? h : w;
  std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
  for (int line = 0; line < lines; ++line) {
    auto at = [&](int i) { return horizontal ? in(i, line) : in(line, i); };
    prefix[0] = 0;
    for (int i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + (at(i) ? 1 : 0);
    for (int i = 0; i < len; ++i) {
      const int lo = std::max(0, i - r);
      const int hi = std::min(len - 1, i + r);
      const int ones = prefix[hi + 1] - prefix[lo];
      const bool v = want_any ? ones > 0 : ones == hi - lo + 1;
      if (horizontal) {
        out(i, line) = v ? 1 : 0;
      } else {
        out(line, i) = v ? 1 : 0;
      }
    }
  }
  return out;
}

std::vector<std::pair<int, int>> disk_offsets(int r) {
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= r * r) offsets.emplace_back(dx, dy);
    }
  }
  return offsets;
}

BinaryMask disk_op(const BinaryMask& in, int r, bool want_any) {
  const auto offsets = disk_offsets(r);
  BinaryMask out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      bool v = !want_any;
      for (const auto& [dx, dy] : offsets) {
        if (!in.contains(x + dx, y + dy)) continue;
        const bool fg = in(x + dx, y + dy) != 0;
        if (want_any && fg) {
          v = true;
          break;
        }
        if (!want_any && !fg) {
          v = false;
          break;
        }
      }
      out(x, y) = v ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
  check_se(se);
  if (se.shape == SeShape::Disk) return disk_op(mask, se.radius, true);
  return square_pass(square_pass(mask, se.radius, true, true), se.radius, false, true);
}

BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
  check_se(se);
  if (se.shape == SeShape::Disk) return disk_op(mask, se.radius, false);
  return square_pass(square_pass(mask, se.radius, true, false), se.radius, false, false);
}

BinaryMask morphology(const BinaryMask& mask, MorphOp op, const StructuringElement& se) {
  switch (op) {
    case MorphOp::Dilate: return dilate(mask, se);
    case MorphOp::Erode: return erode(mask, se);
    case MorphOp::Close: return erode(dilate(mask, se), se);
    case MorphOp::Open: return dilate(erode(mask, se), se);
  }
  return mask;
}

BinaryMask fill_holes(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  Grid<std::uint8_t> outside(w, h, 0);
  std::deque<std::pair<int, int>> queue;
  auto seed = [&](int x, int y) {
    if (!mask(x, y) && !outside(x, y)) {
      outside(x, y) = 1;
      queue.emplace_back(x, y);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k], ny = y + kDy[k];
      if (mask.contains(nx, ny)) seed(nx, ny);
    }
  }
  BinaryMask out(w, h);
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = (mask[i] || !outside[i]) ? 1 : 0;
  return out;
}

Components connected_components(const BinaryMask& mask, Connectivity connectivity) {
  Components result{LabelMap(mask.width(), mask.height(), 0), 0};
  const bool eight = connectivity == Connectivity::Eight;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y) || result.labels(x, y)) continue;
      const std::uint32_t label = ++result.count;
      result.labels(x, y) = label;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        const auto [px, py] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0)) continue;
            const int nx = px + dx, ny = py + dy;
            if (mask.contains(nx, ny) && mask(nx, ny) && !result.labels(nx, ny)) {
              result.labels(nx, ny) = label;
              queue.emplace_back(nx, ny);
            }
          }
        }
      }
    }
  }
  return result;
}

namespace {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher). Sites at or
// above kFar are not part of the envelope. Result replaces f.
constexpr double kFar = 1e20;

void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double kInf = 1e300;
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] >= kFar) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kFar);
  } else {
    k = 0;
    for (int q = 0; q < n; ++q) {
      while (z[k + 1] < q) ++k;
      const double diff = q - v[k];
      d[q] = diff * diff + f[v[k]];
    }
  }
  f.swap(d);
}

}  // namespace

Grid<std::int64_t> squared_distance_transform(const BinaryMask& mask) {
  // One-pixel background frame so the image border acts as background.
  const int w = mask.width() + 2;
  const int h = mask.height() + 2;
  Grid<double> g(w, h, 0.0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) g(x + 1, y + 1) = mask(x, y) ? kFar : 0.0;
  }

  const int n = std::max(w, h);
  std::vector<double> f, d;
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);

  f.resize(static_cast<std::size_t>(h));
  d.resize(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = g(x, y);
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) g(x, y) = f[y];
  }
  f.resize(static_cast<std::size_t>(w));
  d.resize(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = g(x, y);
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) g(x, y) = f[x];
  }

  Grid<std::int64_t> out(mask.width(), mask.height(), 0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) out(x, y) = std::llround(g(x + 1, y + 1));
  }
  return out;
}

ScalarMap distance_transform(const BinaryMask& mask) {
  const Grid<std::int64_t> sq = squared_distance_transform(mask);
  ScalarMap out(mask.width(), mask.height());
  for (std::size_t i = 0; i < sq.size(); ++i) out[i] = static_cast<float>(std::sqrt(static_cast<double>(sq[i])));
  return out;
}

}  // namespace toothseg
